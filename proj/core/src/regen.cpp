#include "vamh/regen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "vamh/errors.hpp"

namespace vamh {

double mty_regen_prob(double log_w_prev, double log_w_curr, double log_c) {
  const double a = log_w_prev - log_c;
  const double b = log_w_curr - log_c;
  if (a < 0.0 && b < 0.0) return std::exp(std::max(a, b));
  if (a > 0.0 && b > 0.0) return std::exp(-std::min(a, b));
  return 1.0;
}

namespace {

inline double eval(const MinorizationSpec::LogFn& f, std::span<const double> x) {
  return f ? f(x) : 0.0;
}

}  // namespace

double cwis_regen_prob(std::span<const double> prev, std::span<const double> curr,
                       const MinorizationSpec& spec, const TargetDensity& target,
                       std::span<const ComponentProposal> proposals) {
  const std::size_t d = target.components();
  if (spec.components.size() != d || proposals.size() != d) {
    throw ConfigError("minorization spec needs one entry per component");
  }
  std::vector<double> before(prev.begin(), prev.end());
  std::vector<double> after = before;
  double log_prob = 0.0;
  double log_pi_before = target.log_pi(before);

  for (const auto& p : proposals) {
    const std::size_t i = p.index;
    const auto& c = spec.components[i];
    const std::size_t off = target.offset(i);
    const std::size_t b = target.dim(i);
    std::copy(curr.begin() + off, curr.begin() + off + b, after.begin() + off);

    const auto y_i = std::span<const double>(after).subspan(off, b);
    const auto x_i = std::span<const double>(before).subspan(off, b);
    const double log_pi_after = target.log_pi(after);
    const double log_p_fwd = p.log_density(before, y_i);
    const double log_p_rev = p.log_density(after, x_i);
    const double alpha =
        mh_accept_log(log_pi_before, log_pi_after, log_p_fwd, log_p_rev);
    if (!(alpha > 0.0)) {
      throw ConfigError("regeneration requested on a jump that cannot be accepted");
    }

    double f = std::min(0.0, eval(c.log_g2, after) - c.log_c - eval(c.log_h2, before)) +
               std::min(0.0, c.log_c + eval(c.log_g1, after) - eval(c.log_h1, before)) -
               std::log(alpha);
    if (!c.q_is_proposal) {
      f += eval(c.log_s, before) + eval(c.log_q, after) - log_p_fwd;
    }
    if (std::isnan(f)) {
      throw MinorizationViolation("regeneration factor for component " +
                                  std::to_string(i) + " is NaN");
    }
    if (f > std::log1p(kRegenTolerance)) {
      throw MinorizationViolation("regeneration factor for component " +
                                  std::to_string(i) + " is " +
                                  std::to_string(std::exp(f)));
    }
    log_prob += std::min(f, 0.0);

    std::copy(y_i.begin(), y_i.end(), before.begin() + off);
    log_pi_before = log_pi_after;
  }
  return std::exp(log_prob);
}

SplitStep split_sweep(ChainState& state,
                      std::span<const ComponentProposal> proposals,
                      const TargetDensity& target, const MinorizationSpec& spec,
                      RandomStream& rng, RandomStream& regen_rng) {
  const std::vector<double> prev = state.x;
  SplitStep step;
  step.sweep = composition_sweep(state, proposals, target, rng);
  step.all_accepted = step.sweep.all_accepted();
  if (step.all_accepted) {
    step.regen_prob = cwis_regen_prob(prev, state.x, spec, target, proposals);
    step.delta = regen_rng.uniform() < step.regen_prob;
  }
  return step;
}

std::size_t SplitTrace::regenerations() const {
  return static_cast<std::size_t>(std::count(delta.begin(), delta.end(), 1));
}

SplitTrace run_split_chain(ChainState& state,
                           std::span<const ComponentProposal> proposals,
                           const TargetDensity& target,
                           const MinorizationSpec& spec, std::size_t n,
                           const Functional& g, RandomStream& rng) {
  RandomStream regen_rng = rng.lane(1);
  SplitTrace trace;
  trace.g.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const SplitStep step =
        split_sweep(state, proposals, target, spec, rng, regen_rng);
    trace.push(g(state.x), step.delta, step.all_accepted);
  }
  return trace;
}

std::vector<Tour> collect_tours(std::span<const double> g,
                                std::span<const std::uint8_t> delta) {
  if (g.size() != delta.size()) {
    throw ConfigError("g and delta must have the same length");
  }
  std::vector<Tour> tours;
  bool open = false;
  Tour current;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (delta[k]) {
      if (open) tours.push_back(current);
      open = true;
      current = Tour{};
    }
    if (open) {
      ++current.N;
      current.S += g[k];
    }
  }
  if (!open) throw InsufficientRegenerations("trace contains no regeneration");
  return tours;
}

std::vector<Tour> collect_tours(const SplitTrace& trace) {
  return collect_tours(trace.g, trace.delta);
}

double rs_point_estimate(std::span<const Tour> tours) {
  if (tours.empty()) throw InsufficientRegenerations("no complete tours");
  double s = 0.0;
  double n = 0.0;
  for (const auto& t : tours) {
    s += t.S;
    n += static_cast<double>(t.N);
  }
  return s / n;
}

double rs_variance(std::span<const Tour> tours) {
  if (tours.empty()) throw InsufficientRegenerations("no complete tours");
  if (tours.size() == 1) return 0.0;
  const double g_bar = rs_point_estimate(tours);
  const double R = static_cast<double>(tours.size());
  double n_sum = 0.0;
  double acc = 0.0;
  for (const auto& t : tours) {
    const double e = t.S - static_cast<double>(t.N) * g_bar;
    acc += e * e;
    n_sum += static_cast<double>(t.N);
  }
  const double n_bar = n_sum / R;
  return acc / (R * n_bar * n_bar);
}

double normal_critical_value(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw DomainError("confidence level must lie in (0, 1)");
  }
  if (level == 0.95) return kZ975;
  return boost::math::quantile(boost::math::normal_distribution<double>(),
                               1.0 - (1.0 - level) / 2.0);
}

RegenEstimate rs_confidence_interval(std::span<const Tour> tours, double level) {
  RegenEstimate est;
  est.g_bar = rs_point_estimate(tours);
  est.xi2_hat = rs_variance(tours);
  est.R = tours.size();
  est.degenerate_variance = est.R < 2;
  double n_sum = 0.0;
  for (const auto& t : tours) n_sum += static_cast<double>(t.N);
  est.mean_tour_length = n_sum / static_cast<double>(est.R);
  est.half_width = normal_critical_value(level) * std::sqrt(est.xi2_hat) /
                   std::sqrt(static_cast<double>(est.R));
  return est;
}

}  // namespace vamh
