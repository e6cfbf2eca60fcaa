#include "vamh/toy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <nlohmann/json.hpp>

#include "vamh/errors.hpp"

namespace vamh {

void ToyModel::validate() const {
  if (!(m >= 2.0)) throw ConfigError("toy model needs m >= 2");
  if (!(s2 > 0.0)) throw ConfigError("toy model needs s2 > 0");
  if (!std::isfinite(a_lo) || !std::isfinite(a_hi) || !(a_lo < a_hi)) {
    throw ConfigError("toy model needs a bounded interval A");
  }
  if (!(b_lo >= 0.0) || !(b_lo < b_hi)) {
    throw ConfigError("toy model needs 0 <= inf B < sup B");
  }
}

double ToyModel::mu_far() const {
  return std::abs(a_lo - y_bar) >= std::abs(a_hi - y_bar) ? a_lo : a_hi;
}

namespace {

double parse_bound(const nlohmann::json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw ConfigError("unrecognized interval bound '" + s + "'");
  }
  return v.get<double>();
}

std::optional<double> parse_auto(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  const auto& v = j[key];
  if (v.is_string()) {
    if (v.get<std::string>() == "auto") return std::nullopt;
    throw ConfigError(std::string(key) + " must be \"auto\" or a number");
  }
  return v.get<double>();
}

}  // namespace

ToyConfig parse_toy_config(std::string_view json_text) {
  ToyConfig cfg;
  try {
    const auto j = nlohmann::json::parse(json_text);
    ToyModel& t = cfg.model;
    t.m = j.value("m", t.m);
    t.y_bar = j.value("y_bar", t.y_bar);
    t.s2 = j.value("s2", t.s2);
    if (j.contains("A")) {
      t.a_lo = parse_bound(j["A"].at(0));
      t.a_hi = parse_bound(j["A"].at(1));
    }
    if (j.contains("B")) {
      t.b_lo = parse_bound(j["B"].at(0));
      t.b_hi = parse_bound(j["B"].at(1));
    }
    if (j.contains("theta_tilde") && j["theta_tilde"] == "median") {
      cfg.theta_tilde_rule = ThetaTildeRule::median;
    } else {
      cfg.theta_tilde = parse_auto(j, "theta_tilde");
    }
    cfg.c = parse_auto(j, "c");
    if (j.contains("start")) {
      cfg.mu0 = j["start"].at(0).get<double>();
      cfg.theta0 = j["start"].at(1).get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("toy config: ") + e.what());
  }
  cfg.model.validate();
  if (!cfg.model.in_a(cfg.mu0) || !cfg.model.in_b(cfg.theta0)) {
    throw ConfigError("toy start point lies outside A x B");
  }
  if (cfg.theta_tilde && !cfg.model.in_b(*cfg.theta_tilde)) {
    throw ConfigError("theta_tilde must lie in B");
  }
  if (cfg.c && !(*cfg.c > 0.0)) throw ConfigError("c must be positive");
  return cfg;
}

double toy_log_target(double mu, double theta, const ToyModel& model) {
  if (!model.in_a(mu) || !model.in_b(theta)) return kNegInf;
  const double d = mu - model.y_bar;
  return -0.5 * (model.m + 1.0) * std::log(theta) -
         (model.s2 + model.m * d * d) / (2.0 * theta);
}

double toy_log_p1(double mu, const ToyModel& model) {
  if (!model.in_a(mu)) return kNegInf;
  const double d = mu - model.y_bar;
  return -model.m * d * d / (2.0 * model.s2);
}

double toy_log_p2(double theta, const ToyModel& model) {
  if (!model.in_b(theta)) return kNegInf;
  return -0.5 * (model.m + 1.0) * std::log(theta) - model.s2 / (2.0 * theta);
}

double toy_log_r1(double mu, double theta, const ToyModel& model) {
  const double d = mu - model.y_bar;
  return -0.5 * (model.m + 1.0) * std::log(theta) - model.s2 / (2.0 * theta) -
         0.5 * model.m * (1.0 / theta - 1.0 / model.s2) * d * d;
}

double toy_log_r2(double mu, double theta, const ToyModel& model) {
  const double d = mu - model.y_bar;
  return -model.m * d * d / (2.0 * theta);
}

double toy_log_w(double mu, double theta, const ToyModel& model) {
  const double d = mu - model.y_bar;
  return -0.5 * model.m * (1.0 / theta - 1.0 / model.s2) * d * d;
}

double sample_truncated_normal(double mean, double sd, double lo, double hi,
                               RandomStream& rng) {
  for (std::size_t k = 0; k < kMaxRejections; ++k) {
    const double v = mean + sd * rng.normal();
    if (v > lo && v < hi) return v;
  }
  throw TruncationError("truncated normal: too many consecutive rejections");
}

double sample_truncated_invgamma(double shape, double rate, double lo,
                                 double hi, RandomStream& rng) {
  for (std::size_t k = 0; k < kMaxRejections; ++k) {
    const double v = rate / rng.gamma(shape);
    if (v > lo && v < hi) return v;
  }
  throw TruncationError("truncated inverse gamma: too many consecutive rejections");
}

double toy_propose_mu(const ToyModel& model, RandomStream& rng) {
  return sample_truncated_normal(model.y_bar, std::sqrt(model.s2 / model.m),
                                 model.a_lo, model.a_hi, rng);
}

double toy_propose_theta(const ToyModel& model, RandomStream& rng) {
  return sample_truncated_invgamma(0.5 * (model.m - 1.0), 0.5 * model.s2,
                                   model.b_lo, model.b_hi, rng);
}

namespace {

inline double min1_exp(double log_ratio) {
  return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

}  // namespace

double toy_mhis_accept(double mu, double theta, double mu_star,
                       double theta_star, const ToyModel& model) {
  const double d = mu - model.y_bar;
  const double ds = mu_star - model.y_bar;
  const double inv_s2 = 1.0 / model.s2;
  return min1_exp(-0.5 * model.m *
                  ((inv_s2 - 1.0 / theta) * d * d -
                   (inv_s2 - 1.0 / theta_star) * ds * ds));
}

double toy_cwis_accept_mu(double mu, double mu_star, double theta,
                          const ToyModel& model) {
  const double d = mu - model.y_bar;
  const double ds = mu_star - model.y_bar;
  return min1_exp(-0.5 * model.m * (1.0 / model.s2 - 1.0 / theta) *
                  (d * d - ds * ds));
}

double toy_cwis_accept_theta(double theta, double theta_star, double mu,
                             const ToyModel& model) {
  const double d = mu - model.y_bar;
  return min1_exp(-0.5 * model.m * (1.0 / theta_star - 1.0 / theta) * d * d);
}

double toy_log_g1(double mu, double theta_tilde, const ToyModel& model) {
  const double d = mu - model.y_bar;
  return -0.5 * model.m * (1.0 / theta_tilde - 1.0 / model.s2) * d * d;
}

double toy_log_g2(double theta, double theta_tilde, const ToyModel& model) {
  if (!(theta > theta_tilde)) return kNegInf;
  return -0.5 * (model.m + 1.0) * std::log(theta) - model.s2 / (2.0 * theta);
}

MinorizationSpec toy_minorization_spec(const ToyModel& model, double theta_tilde) {
  if (!model.in_b(theta_tilde)) throw ConfigError("theta_tilde must lie in B");
  MinorizationSpec spec;
  spec.components.resize(2);
  auto& mu = spec.components[0];
  mu.q_is_proposal = true;
  mu.log_g1 = [model, theta_tilde](std::span<const double> x) {
    return toy_log_g1(x[0], theta_tilde, model);
  };
  mu.log_g2 = [model, theta_tilde](std::span<const double> x) {
    return toy_log_g2(x[1], theta_tilde, model);
  };
  mu.log_h2 = [model](std::span<const double> x) {
    return toy_log_r1(x[0], x[1], model);
  };
  auto& th = spec.components[1];
  th.q_is_proposal = true;
  th.log_g1 = [model](std::span<const double> x) {
    return toy_log_r2(x[0], x[1], model);
  };
  return spec;
}

namespace {

double checked_factor(double log_f, const char* what) {
  if (std::isnan(log_f) || log_f > std::log1p(kRegenTolerance)) {
    throw MinorizationViolation(std::string(what) + " regeneration factor exceeds one");
  }
  return std::min(log_f, 0.0);
}

}  // namespace

double toy_cwis_regen_prob(double mu_prev, double theta_prev, double mu,
                           double theta, double theta_tilde,
                           const ToyModel& model) {
  const double r1_prev = toy_log_r1(mu_prev, theta_prev, model);
  const double r1_mid = toy_log_r1(mu, theta_prev, model);
  const double f1 =
      std::min(0.0, toy_log_g2(theta_prev, theta_tilde, model) - r1_prev) +
      std::min(0.0, toy_log_g1(mu, theta_tilde, model)) -
      std::min(0.0, r1_mid - r1_prev);
  if (f1 == kNegInf) return 0.0;
  const double r2_mid = toy_log_r2(mu, theta_prev, model);
  const double r2_new = toy_log_r2(mu, theta, model);
  const double f2 = std::min(0.0, r2_new) - std::min(0.0, r2_new - r2_mid);
  return std::exp(checked_factor(f1, "mu") + checked_factor(f2, "theta"));
}

TargetDensity make_toy_target(const ToyModel& model) {
  auto log_pi = [model](std::span<const double> x) {
    return toy_log_target(x[0], x[1], model);
  };
  auto support = [model](std::size_t i, std::span<const double> c) {
    return i == 0 ? model.in_a(c[0]) : model.in_b(c[0]);
  };
  return TargetDensity({1, 1}, log_pi, support);
}

std::vector<ComponentProposal> make_toy_cwis_proposals(const ToyModel& model) {
  ComponentProposal mu;
  mu.index = 0;
  mu.state_independent = true;
  mu.sample = [model](std::span<const double>, RandomStream& rng,
                      std::span<double> cand) { cand[0] = toy_propose_mu(model, rng); };
  mu.log_density = [model](std::span<const double>, std::span<const double> c) {
    return toy_log_p1(c[0], model);
  };
  ComponentProposal th;
  th.index = 1;
  th.state_independent = true;
  th.sample = [model](std::span<const double>, RandomStream& rng,
                      std::span<double> cand) {
    cand[0] = toy_propose_theta(model, rng);
  };
  th.log_density = [model](std::span<const double>, std::span<const double> c) {
    return toy_log_p2(c[0], model);
  };
  return {mu, th};
}

TargetDensity make_toy_joint_target(const ToyModel& model) {
  auto log_pi = [model](std::span<const double> x) {
    return toy_log_target(x[0], x[1], model);
  };
  auto support = [model](std::size_t, std::span<const double> c) {
    return model.in_a(c[0]) && model.in_b(c[1]);
  };
  return TargetDensity({2}, log_pi, support);
}

ComponentProposal make_toy_mhis_proposal(const ToyModel& model) {
  ComponentProposal p;
  p.index = 0;
  p.state_independent = true;
  p.sample = [model](std::span<const double>, RandomStream& rng,
                     std::span<double> cand) {
    cand[0] = toy_propose_mu(model, rng);
    cand[1] = toy_propose_theta(model, rng);
  };
  p.log_density = [model](std::span<const double>, std::span<const double> c) {
    return toy_log_p1(c[0], model) + toy_log_p2(c[1], model);
  };
  return p;
}

namespace {

constexpr double kQuadTol = 1e-8;
constexpr unsigned kQuadDepth = 20;

// Integral over A x B of f(mu, theta) exp(log target - shift).
double integrate_posterior(const ToyModel& model,
                           const std::function<double(double, double)>& f,
                           double shift) {
  using boost::math::quadrature::gauss_kronrod;
  const double m = model.m;
  auto inner = [&](double theta) {
    const double sd = std::sqrt(theta / m);
    const double lo = std::max(model.a_lo, model.y_bar - 40.0 * sd);
    const double hi = std::min(model.a_hi, model.y_bar + 40.0 * sd);
    if (!(lo < hi)) return 0.0;
    const double base = -0.5 * (m + 1.0) * std::log(theta) -
                        model.s2 / (2.0 * theta) - shift;
    auto integrand = [&](double mu) {
      const double d = mu - model.y_bar;
      return f(mu, theta) * std::exp(base - m * d * d / (2.0 * theta));
    };
    const double mid = std::clamp(model.y_bar, lo, hi);
    double total = 0.0;
    for (auto [a, b] : {std::pair{lo, mid}, std::pair{mid, hi}}) {
      if (!(a < b)) continue;
      double err = 0.0, l1 = 0.0;
      total += gauss_kronrod<double, 61>::integrate(integrand, a, b, kQuadDepth,
                                                    1e-12, &err, &l1);
      if (err > kQuadTol * 1e-2 * std::max(l1, 1e-300)) {
        throw OracleError("inner quadrature did not converge");
      }
    }
    return total;
  };
  double err = 0.0, l1 = 0.0;
  const double value = gauss_kronrod<double, 61>::integrate(
      inner, model.b_lo, model.b_hi, kQuadDepth, 1e-10, &err, &l1);
  if (!std::isfinite(value) || err > kQuadTol * std::max(l1, 1e-300)) {
    throw OracleError("outer quadrature did not converge");
  }
  return value;
}

double posterior_shift(const ToyModel& model) {
  const double t = model.s2 / (model.m + 1.0);
  return -0.5 * (model.m + 1.0) * std::log(t) - model.s2 / (2.0 * t);
}

}  // namespace

double toy_posterior_expectation(const ToyModel& model,
                                 const std::function<double(double, double)>& f) {
  model.validate();
  const double shift = posterior_shift(model);
  const double z = integrate_posterior(
      model, [](double, double) { return 1.0; }, shift);
  if (!(z > 0.0)) throw OracleError("posterior has no mass on A x B");
  return integrate_posterior(model, f, shift) / z;
}

double toy_log_posterior_normalizer(const ToyModel& model) {
  model.validate();
  const double shift = posterior_shift(model);
  return std::log(integrate_posterior(
             model, [](double, double) { return 1.0; }, shift)) +
         shift;
}

double toy_log_proposal_normalizer(const ToyModel& model) {
  model.validate();
  const double sd = std::sqrt(model.s2 / model.m);
  const double z_hi = (model.a_hi - model.y_bar) / (sd * std::sqrt(2.0));
  const double z_lo = (model.a_lo - model.y_bar) / (sd * std::sqrt(2.0));
  const double mass_a = 0.5 * (boost::math::erf(z_hi) - boost::math::erf(z_lo));
  const double a = 0.5 * (model.m - 1.0);
  const double b = 0.5 * model.s2;
  const double q_hi = std::isinf(model.b_hi) ? 1.0 : boost::math::gamma_q(a, b / model.b_hi);
  const double q_lo = model.b_lo > 0.0 ? boost::math::gamma_q(a, b / model.b_lo) : 0.0;
  const double mass_b = q_hi - q_lo;
  return 0.5 * std::log(2.0 * M_PI * model.s2 / model.m) + std::log(mass_a) +
         std::lgamma(a) - a * std::log(b) + std::log(mass_b);
}

double oracle_posterior_mean_icv(const ToyModel& model) {
  return toy_posterior_expectation(model, toy_icv);
}

double toy_mhis_delta(const ToyModel& model) {
  const double d = model.mu_far() - model.y_bar;
  return std::exp(toy_log_posterior_normalizer(model) -
                  toy_log_proposal_normalizer(model) -
                  model.m * d * d / (2.0 * model.s2));
}

double toy_cwis_epsilon(const ToyModel& model) {
  if (!(model.b_lo > 0.0)) {
    throw DomainError("cross-ratio constant needs B bounded away from zero");
  }
  const double d = model.mu_far() - model.y_bar;
  return std::exp(-model.m * d * d / (2.0 * model.b_lo));
}

namespace {

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

namespace {

// Cutoff among the 1%..99% quantiles of thetas that maximizes the mean
// regeneration probability over the recorded accepted jumps. Candidates stay
// below s2 so that g1 <= 1.
double rate_optimal_theta_tilde(const ToyModel& model, std::vector<double> thetas,
                                const std::vector<std::array<double, 4>>& jumps) {
  std::sort(thetas.begin(), thetas.end());
  const double fallback = thetas[thetas.size() / 2];
  double best = fallback;
  double best_rate = -1.0;
  for (int pct = 1; pct <= 99; ++pct) {
    const auto idx = static_cast<std::size_t>(pct * (thetas.size() - 1) / 100);
    const double cut = thetas[idx];
    if (!model.in_b(cut) || !(cut < model.s2)) continue;
    double rate = 0.0;
    for (const auto& j : jumps) rate += toy_cwis_regen_prob(j[0], j[1], j[2], j[3], cut, model);
    if (rate > best_rate) {
      best_rate = rate;
      best = cut;
    }
  }
  return best;
}

}  // namespace

ToyRegenConstants toy_regen_constants(const ToyConfig& config, std::size_t n,
                                      RandomStream& rng) {
  if (n == 0) throw ConfigError("preliminary run needs at least one step");
  const ToyModel& model = config.model;
  ToyRegenConstants k;
  // Placeholders keep the preliminary chains' regeneration draws harmless.
  k.theta_tilde = config.theta0;
  k.log_c = 0.0;

  if (config.theta_tilde) {
    k.theta_tilde = *config.theta_tilde;
  } else {
    ToyChain chain(model, ToySampler::cwis, k, config.mu0, config.theta0, rng);
    std::vector<double> thetas(n);
    std::vector<std::array<double, 4>> jumps;
    for (auto& t : thetas) {
      const double mu_prev = chain.mu();
      const double theta_prev = chain.theta();
      if (chain.advance().all_accepted) {
        jumps.push_back({mu_prev, theta_prev, chain.mu(), chain.theta()});
      }
      t = chain.theta();
    }
    k.theta_tilde = config.theta_tilde_rule == ThetaTildeRule::median
                        ? median(std::move(thetas))
                        : rate_optimal_theta_tilde(model, std::move(thetas), jumps);
  }
  if (config.c) {
    k.log_c = std::log(*config.c);
  } else {
    ToyChain chain(model, ToySampler::mhis, k, config.mu0, config.theta0,
                   rng.lane(2));
    std::vector<double> log_w(n);
    for (auto& w : log_w) {
      chain.advance();
      w = toy_log_w(chain.mu(), chain.theta(), model);
    }
    k.log_c = median(std::move(log_w));
  }
  return k;
}

ToyChain::ToyChain(const ToyModel& model, ToySampler kind,
                   ToyRegenConstants constants, double mu0, double theta0,
                   RandomStream rng)
    : model_(model),
      kind_(kind),
      k_(constants),
      mu_(mu0),
      theta_(theta0),
      rng_(rng),
      regen_rng_(rng.lane(1)) {
  model_.validate();
  if (!model_.in_a(mu_) || !model_.in_b(theta_)) {
    throw InvalidStateError("toy chain must start inside A x B");
  }
}

ToyChain::Step ToyChain::advance() {
  const double mu_prev = mu_;
  const double theta_prev = theta_;
  Step s;
  ++steps_;
  if (kind_ == ToySampler::cwis) {
    const double mu_star = toy_propose_mu(model_, rng_);
    const double a1 = toy_cwis_accept_mu(mu_, mu_star, theta_, model_);
    const bool acc1 = rng_.uniform() < a1;
    if (acc1) mu_ = mu_star;
    const double theta_star = toy_propose_theta(model_, rng_);
    const double a2 = toy_cwis_accept_theta(theta_, theta_star, mu_, model_);
    const bool acc2 = rng_.uniform() < a2;
    if (acc2) theta_ = theta_star;
    accepted_[0] += acc1;
    accepted_[1] += acc2;
    s.all_accepted = acc1 && acc2;
    if (s.all_accepted) {
      const double p = toy_cwis_regen_prob(mu_prev, theta_prev, mu_, theta_,
                                           k_.theta_tilde, model_);
      s.delta = regen_rng_.uniform() < p;
    }
  } else {
    const double mu_star = toy_propose_mu(model_, rng_);
    const double theta_star = toy_propose_theta(model_, rng_);
    const double a = toy_mhis_accept(mu_, theta_, mu_star, theta_star, model_);
    s.all_accepted = rng_.uniform() < a;
    if (s.all_accepted) {
      mu_ = mu_star;
      theta_ = theta_star;
      ++accepted_[0];
      ++accepted_[1];
      const double p = mty_regen_prob(toy_log_w(mu_prev, theta_prev, model_),
                                      toy_log_w(mu_, theta_, model_), k_.log_c);
      s.delta = regen_rng_.uniform() < p;
    }
  }
  s.g = toy_icv(mu_, theta_);
  return s;
}

SplitTrace run_toy_split_chain(const ToyModel& model, ToySampler kind,
                               const ToyRegenConstants& constants, double mu0,
                               double theta0, std::size_t n, RandomStream rng) {
  ToyChain chain(model, kind, constants, mu0, theta0, rng);
  SplitTrace trace;
  trace.g.reserve(n);
  trace.delta.reserve(n);
  trace.all_accepted.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto s = chain.advance();
    trace.push(s.g, s.delta, s.all_accepted);
  }
  return trace;
}

}  // namespace vamh
