#include "vamh/chain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "vamh/errors.hpp"

namespace vamh {

TargetDensity::TargetDensity(std::vector<std::size_t> dims, LogDensity log_pi,
                             Support support, LogDelta delta)
    : dims_(std::move(dims)),
      log_pi_(std::move(log_pi)),
      support_(std::move(support)),
      delta_(std::move(delta)) {
  if (dims_.empty()) throw ConfigError("target needs at least one component");
  if (!log_pi_) throw ConfigError("target needs a log density");
  offsets_.reserve(dims_.size());
  for (std::size_t b : dims_) {
    if (b == 0) throw ConfigError("component dimension must be positive");
    offsets_.push_back(total_);
    total_ += b;
  }
}

double TargetDensity::log_pi(std::span<const double> x) const {
  if (support_) {
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (!support_(i, component(x, i))) return kNegInf;
    }
  }
  return log_pi_(x);
}

bool TargetDensity::in_support(std::size_t i,
                               std::span<const double> comp) const {
  return !support_ || support_(i, comp);
}

double TargetDensity::log_pi_delta(std::span<const double> x, std::size_t i,
                                   std::span<const double> candidate) const {
  if (!in_support(i, candidate)) return kNegInf;
  if (delta_) return delta_(x, i, candidate);
  std::vector<double> y(x.begin(), x.end());
  std::copy(candidate.begin(), candidate.end(), y.begin() + offsets_[i]);
  return log_pi(y) - log_pi(x);
}

ChainState ChainState::make(const TargetDensity& target, std::vector<double> x) {
  if (x.size() != target.total_dim()) {
    throw ConfigError("state has " + std::to_string(x.size()) +
                      " entries, target expects " +
                      std::to_string(target.total_dim()));
  }
  const double lp = target.log_pi(x);
  if (!(lp > kNegInf)) throw InvalidStateError("initial state has zero density");
  return ChainState{std::move(x), lp};
}

double mh_accept_log(double log_pi_x, double log_pi_y, double log_p_xy,
                     double log_p_yx) {
  if (!(log_pi_x > kNegInf) || std::isnan(log_pi_x)) {
    throw InvalidStateError("current state has zero target density");
  }
  if (!(log_p_xy > kNegInf)) {
    throw DomainError("candidate has zero proposal density");
  }
  if (!(log_pi_y > kNegInf)) return 0.0;
  if (!(log_p_yx > kNegInf)) return 0.0;
  const double log_ratio = (log_pi_y - log_pi_x) + (log_p_yx - log_p_xy);
  if (std::isnan(log_ratio)) throw InvalidStateError("acceptance ratio is NaN");
  if (log_ratio >= 0.0) return 1.0;
  return std::exp(log_ratio);
}

UpdateResult mh_step(ChainState& state, const ComponentProposal& proposal,
                     const TargetDensity& target, RandomStream& rng) {
  const std::size_t i = proposal.index;
  const std::size_t off = target.offset(i);
  const std::size_t b = target.dim(i);

  std::vector<double> candidate(b);
  proposal.sample(state.x, rng, candidate);

  const double delta = target.log_pi_delta(state.x, i, candidate);
  const double log_pi_y = state.log_pi + delta;

  UpdateResult out;
  if (log_pi_y > kNegInf) {
    std::vector<double> proposed = state.x;
    std::copy(candidate.begin(), candidate.end(), proposed.begin() + off);
    const double log_p_xy = proposal.log_density(state.x, candidate);
    const double log_p_yx = proposal.log_density(
        proposed, std::span<const double>(state.x).subspan(off, b));
    out.alpha = mh_accept_log(state.log_pi, log_pi_y, log_p_xy, log_p_yx);
  }

  const double u = rng.uniform();
  if (u < out.alpha) {
    std::copy(candidate.begin(), candidate.end(), state.x.begin() + off);
    state.log_pi = target.has_delta() ? log_pi_y : target.log_pi(state.x);
    out.accepted = true;
  }
  return out;
}

bool SweepResult::all_accepted() const {
  return std::all_of(updates.begin(), updates.end(),
                     [](const UpdateResult& u) { return u.accepted; });
}

bool SweepResult::any_accepted() const {
  return std::any_of(updates.begin(), updates.end(),
                     [](const UpdateResult& u) { return u.accepted; });
}

namespace {

void check_permutation(std::span<const ComponentProposal> proposals,
                       std::size_t d) {
  if (proposals.size() != d) {
    throw ConfigError("expected " + std::to_string(d) + " proposals, got " +
                      std::to_string(proposals.size()));
  }
  std::vector<bool> seen(d, false);
  for (const auto& p : proposals) {
    if (p.index >= d || seen[p.index]) {
      throw ConfigError("proposal indices must be a permutation of 0..d-1");
    }
    seen[p.index] = true;
  }
}

}  // namespace

SweepResult composition_sweep(ChainState& state,
                              std::span<const ComponentProposal> proposals,
                              const TargetDensity& target, RandomStream& rng) {
  check_permutation(proposals, target.components());
  SweepResult result;
  result.updates.reserve(proposals.size());
  for (const auto& p : proposals) {
    result.updates.push_back(mh_step(state, p, target, rng));
  }
  return result;
}

void validate_mixing_weights(std::span<const double> weights, std::size_t d) {
  if (weights.size() != d) {
    throw ConfigError("mixing weights must have one entry per component");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw ConfigError("mixing weights must be positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw ConfigError("mixing weights must sum to one");
  }
}

MixingResult mixing_step(ChainState& state,
                         std::span<const ComponentProposal> proposals,
                         std::span<const double> weights,
                         const TargetDensity& target, RandomStream& rng) {
  const std::size_t d = target.components();
  validate_mixing_weights(weights, d);
  if (proposals.size() != d) throw ConfigError("one proposal per component");

  const double u = rng.uniform();
  std::size_t chosen = d - 1;
  double cum = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    cum += weights[k];
    if (u < cum) {
      chosen = k;
      break;
    }
  }
  if (proposals[chosen].index != chosen) {
    throw ConfigError("mixing proposals must be ordered by component");
  }
  return MixingResult{chosen, mh_step(state, proposals[chosen], target, rng)};
}

ChainRun run_chain(ChainState& state, const Kernel& kernel,
                   const TargetDensity& target, std::size_t n,
                   const Functional& g, RandomStream& rng) {
  if (n == 0) throw ConfigError("run_chain needs n >= 1");
  const std::size_t d = target.components();
  if (kernel.kind == KernelKind::single_block &&
      (d != 1 || kernel.proposals.size() != 1)) {
    throw ConfigError("single-block kernel needs a one-component target");
  }
  if (kernel.kind == KernelKind::mixing) {
    validate_mixing_weights(kernel.weights, d);
  }

  ChainRun run;
  run.components = d;
  run.g.reserve(n);
  run.accepted.assign(n * d, 0);
  std::vector<std::size_t> tried(d, 0), taken(d, 0);

  for (std::size_t step = 0; step < n; ++step) {
    std::uint8_t* row = run.accepted.data() + step * d;
    switch (kernel.kind) {
      case KernelKind::composition: {
        const SweepResult sweep =
            composition_sweep(state, kernel.proposals, target, rng);
        for (std::size_t k = 0; k < d; ++k) {
          const std::size_t i = kernel.proposals[k].index;
          row[i] = sweep.updates[k].accepted;
          ++tried[i];
          taken[i] += sweep.updates[k].accepted;
        }
        break;
      }
      case KernelKind::mixing: {
        const MixingResult mix = mixing_step(state, kernel.proposals,
                                             kernel.weights, target, rng);
        row[mix.chosen] = mix.update.accepted;
        ++tried[mix.chosen];
        taken[mix.chosen] += mix.update.accepted;
        break;
      }
      case KernelKind::single_block: {
        const UpdateResult up =
            mh_step(state, kernel.proposals.front(), target, rng);
        row[0] = up.accepted;
        ++tried[0];
        taken[0] += up.accepted;
        break;
      }
    }
    run.g.push_back(g(state.x));
  }

  run.acceptance_rate.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    run.acceptance_rate[i] =
        tried[i] ? static_cast<double>(taken[i]) / static_cast<double>(tried[i])
                 : 0.0;
  }
  run.ergodic_average =
      std::accumulate(run.g.begin(), run.g.end(), 0.0) / static_cast<double>(n);
  return run;
}

}  // namespace vamh
