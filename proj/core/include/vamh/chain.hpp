#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "vamh/random.hpp"

namespace vamh {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Unnormalized log density on a product space X_1 x ... x X_d.
///
/// The state is stored flat; component i occupies dims[i] consecutive
/// entries starting at offset(i). When a support predicate is supplied,
/// log_pi() returns -inf without calling the density for any state with a
/// component outside its support.
class TargetDensity {
 public:
  using LogDensity = std::function<double(std::span<const double>)>;
  using Support = std::function<bool(std::size_t, std::span<const double>)>;
  /// log pi(x with component i replaced by candidate) - log pi(x).
  using LogDelta = std::function<double(std::span<const double>, std::size_t,
                                        std::span<const double>)>;

  TargetDensity(std::vector<std::size_t> dims, LogDensity log_pi,
                Support support = {}, LogDelta delta = {});

  std::size_t components() const { return dims_.size(); }
  std::size_t dim(std::size_t i) const { return dims_[i]; }
  std::size_t offset(std::size_t i) const { return offsets_[i]; }
  std::size_t total_dim() const { return total_; }

  double log_pi(std::span<const double> x) const;
  bool in_support(std::size_t i, std::span<const double> component) const;
  bool has_delta() const { return static_cast<bool>(delta_); }
  double log_pi_delta(std::span<const double> x, std::size_t i,
                      std::span<const double> candidate) const;

  std::span<const double> component(std::span<const double> x,
                                    std::size_t i) const {
    return x.subspan(offsets_[i], dims_[i]);
  }
  std::span<double> component(std::span<double> x, std::size_t i) const {
    return x.subspan(offsets_[i], dims_[i]);
  }

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
  LogDensity log_pi_;
  Support support_;
  LogDelta delta_;
};

/// Proposal kernel p_i(x, .) for one component.
struct ComponentProposal {
  using Sampler = std::function<void(std::span<const double> state,
                                     RandomStream& rng,
                                     std::span<double> candidate)>;
  using LogDensity = std::function<double(std::span<const double> state,
                                          std::span<const double> candidate)>;

  std::size_t index = 0;
  Sampler sample;
  /// log p_i(state, candidate), up to a constant that may not depend on state.
  LogDensity log_density;
  /// True when p_i ignores the current state (independence proposals).
  bool state_independent = false;
};

struct ChainState {
  std::vector<double> x;
  double log_pi = kNegInf;

  /// Evaluates and caches log pi(x); throws InvalidStateError off support.
  static ChainState make(const TargetDensity& target, std::vector<double> x);
};

/// min{1, pi(y) p(y,x) / (pi(x) p(x,y))} evaluated in log space.
double mh_accept_log(double log_pi_x, double log_pi_y, double log_p_xy,
                     double log_p_yx);

struct UpdateResult {
  bool accepted = false;
  double alpha = 0.0;
};

/// One Metropolis-Hastings update of component proposal.index.
/// Consumes the proposal's draws followed by exactly one uniform.
UpdateResult mh_step(ChainState& state, const ComponentProposal& proposal,
                     const TargetDensity& target, RandomStream& rng);

struct SweepResult {
  std::vector<UpdateResult> updates;  // in visiting order

  bool all_accepted() const;
  bool any_accepted() const;
};

/// Deterministic scan: one mh_step per proposal, in the order given.
/// The proposal indices must be a permutation of 0..d-1.
SweepResult composition_sweep(ChainState& state,
                              std::span<const ComponentProposal> proposals,
                              const TargetDensity& target, RandomStream& rng);

struct MixingResult {
  std::size_t chosen = 0;
  UpdateResult update;
};

/// Random scan: pick component i with probability weights[i] (one uniform)
/// and apply its update. proposals[i] must carry index i.
MixingResult mixing_step(ChainState& state,
                         std::span<const ComponentProposal> proposals,
                         std::span<const double> weights,
                         const TargetDensity& target, RandomStream& rng);

/// Throws ConfigError unless weights form a strictly positive probability
/// vector of length d (sum within 1e-12 of one).
void validate_mixing_weights(std::span<const double> weights, std::size_t d);

enum class KernelKind { composition, mixing, single_block };

struct Kernel {
  KernelKind kind = KernelKind::composition;
  std::vector<ComponentProposal> proposals;
  std::vector<double> weights;  // mixing only
};

using Functional = std::function<double(std::span<const double>)>;

struct ChainRun {
  std::size_t components = 0;
  std::vector<double> g;               // g(X^(k)), k = 1..n
  std::vector<std::uint8_t> accepted;  // n x components, row major
  std::vector<double> acceptance_rate; // per component
  double ergodic_average = 0.0;

  std::size_t steps() const { return g.size(); }
  bool accepted_at(std::size_t step, std::size_t i) const {
    return accepted[step * components + i] != 0;
  }
};

/// Runs n transitions from `state` (updated in place) and records g after
/// each one. For the mixing kernel only the chosen component's flag can be
/// set, and its acceptance rate is relative to the number of times chosen.
ChainRun run_chain(ChainState& state, const Kernel& kernel,
                   const TargetDensity& target, std::size_t n,
                   const Functional& g, RandomStream& rng);

}  // namespace vamh
