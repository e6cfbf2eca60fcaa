#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "vamh/chain.hpp"

namespace vamh {

/// Regeneration probability of a Mykland-Tierney-Yu split on an accepted
/// jump, where w = pi/p for an independence sampler (or w = pi for a
/// random walk with the s q / p factor applied separately):
///
///   min{1, c/w(x)} min{1, w(y)/c} / min{1, w(y)/w(x)}
///
/// which is max{w(x), w(y)}/c when both lie below c, c/min{w(x), w(y)} when
/// both lie above, and 1 otherwise.
double mty_regen_prob(double log_w_prev, double log_w_curr, double log_c);

/// Component-wise minorization ingredients.
///
/// Every function takes a full state vector. For visiting position i the
/// rule evaluates s_i, h_i1 and h_i2 on before = (y_[i-1], x^[i]) and q_i,
/// g_i1 and g_i2 on after = (y_[i], x^[i+1]); each function must read only
/// the coordinates its argument list allows. Empty functions are identically
/// one (log zero).
struct MinorizationSpec {
  using LogFn = std::function<double(std::span<const double>)>;

  struct Component {
    LogFn log_s;
    LogFn log_q;
    /// q_i(y_[i]) equals the proposal density p_i(before, y_i) and s_i is
    /// one, so both cancel against the denominator before evaluation.
    bool q_is_proposal = false;
    LogFn log_g1;
    LogFn log_g2;
    LogFn log_h1;
    LogFn log_h2;
    double log_c = 0.0;
  };

  /// Indexed by component, not by visiting position.
  std::vector<Component> components;
};

inline constexpr double kRegenTolerance = 1e-9;

/// Probability of regeneration on a jump prev -> curr on which every
/// component proposal was accepted, for the composition kernel visiting
/// components in the order of `proposals`. Throws MinorizationViolation if
/// any per-component factor exceeds 1 + 1e-9.
double cwis_regen_prob(std::span<const double> prev, std::span<const double> curr,
                       const MinorizationSpec& spec, const TargetDensity& target,
                       std::span<const ComponentProposal> proposals);

struct SplitStep {
  SweepResult sweep;
  bool delta = false;
  bool all_accepted = false;
  double regen_prob = 0.0;
};

/// composition_sweep followed by the regeneration draw. When a component
/// proposal was rejected delta is 0 and no draw is made; otherwise one
/// uniform is taken from regen_rng. The state path depends on rng alone.
SplitStep split_sweep(ChainState& state,
                      std::span<const ComponentProposal> proposals,
                      const TargetDensity& target, const MinorizationSpec& spec,
                      RandomStream& rng, RandomStream& regen_rng);

/// Row k holds g(X^(k)) and whether the jump into X^(k) regenerated, so a
/// row with delta = 1 opens a new tour.
struct SplitTrace {
  std::vector<double> g;
  std::vector<std::uint8_t> delta;
  std::vector<std::uint8_t> all_accepted;

  std::size_t size() const { return g.size(); }
  void push(double value, bool regen, bool accepted) {
    g.push_back(value);
    delta.push_back(regen ? 1 : 0);
    all_accepted.push_back(accepted ? 1 : 0);
  }
  std::size_t regenerations() const;
};

/// n split sweeps from state; regeneration draws use lane 1 of rng.
SplitTrace run_split_chain(ChainState& state,
                           std::span<const ComponentProposal> proposals,
                           const TargetDensity& target,
                           const MinorizationSpec& spec, std::size_t n,
                           const Functional& g, RandomStream& rng);

struct Tour {
  std::size_t N = 0;
  double S = 0.0;
};

/// Complete tours between consecutive regenerations. Rows before the first
/// regeneration and from the last one onward are discarded. Throws
/// InsufficientRegenerations when no row regenerates.
std::vector<Tour> collect_tours(std::span<const double> g,
                                std::span<const std::uint8_t> delta);
std::vector<Tour> collect_tours(const SplitTrace& trace);

/// sum S_r / sum N_r.
double rs_point_estimate(std::span<const Tour> tours);

/// (1 / (R Nbar^2)) sum (S_r - N_r gbar)^2; zero when R = 1.
double rs_variance(std::span<const Tour> tours);

inline constexpr double kZ975 = 1.959964;

struct RegenEstimate {
  double g_bar = 0.0;
  double xi2_hat = 0.0;
  std::size_t R = 0;
  double half_width = 0.0;
  double mean_tour_length = 0.0;
  /// Set when R = 1 and the variance estimate is meaningless.
  bool degenerate_variance = false;
};

/// Two-sided interval at `level`; the 0.95 quantile is the stored kZ975.
RegenEstimate rs_confidence_interval(std::span<const Tour> tours,
                                     double level = 0.95);

/// Upper 1 - (1 - level)/2 standard normal quantile.
double normal_critical_value(double level);

}  // namespace vamh
