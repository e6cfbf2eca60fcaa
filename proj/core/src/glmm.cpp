#include "vamh/glmm.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "vamh/errors.hpp"

namespace vamh {

double GlmmModel::sum_xy() const {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < x[i].size(); ++j) s += x[i][j] * y[i][j];
  }
  return s;
}

void GlmmModel::validate() const {
  if (x.empty()) throw ConfigError("GLMM needs at least one group");
  if (y.size() != x.size() || y_plus.size() != x.size()) {
    throw ConfigError("GLMM x, y and y_plus must have one entry per group");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].empty() || y[i].size() != x[i].size()) {
      throw ConfigError("GLMM group " + std::to_string(i) + " has mismatched data");
    }
    double s = 0.0;
    for (auto v : y[i]) {
      if (v > 1) throw ConfigError("GLMM responses must be 0 or 1");
      s += v;
    }
    if (s != y_plus[i]) throw ConfigError("GLMM y_plus does not match y");
  }
  if (!(sigma2 > 0.0)) throw ConfigError("GLMM needs sigma2 > 0");
  if (!std::isfinite(beta)) throw ConfigError("GLMM needs a finite beta");
}

GlmmModel make_glmm_model(std::vector<std::vector<double>> x,
                          std::vector<std::vector<std::uint8_t>> y, double beta,
                          double sigma2) {
  GlmmModel m;
  m.x = std::move(x);
  m.y = std::move(y);
  m.beta = beta;
  m.sigma2 = sigma2;
  m.y_plus.resize(m.y.size());
  for (std::size_t i = 0; i < m.y.size(); ++i) {
    double s = 0.0;
    for (auto v : m.y[i]) s += v;
    m.y_plus[i] = s;
  }
  m.validate();
  return m;
}

std::vector<std::vector<double>> glmm_grid_covariates(std::span<const std::size_t> m) {
  std::vector<std::vector<double>> x(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 1; j <= m[i]; ++j) {
      x[i].push_back(static_cast<double>(j) / static_cast<double>(m[i]));
    }
  }
  return x;
}

GlmmModel glmm_simulate_data(const std::vector<std::vector<double>>& x,
                             double beta, double sigma2, RandomStream& rng) {
  if (!(sigma2 >= 0.0)) throw ConfigError("generating sigma2 must be nonnegative");
  const double sd = std::sqrt(sigma2);
  std::vector<std::vector<std::uint8_t>> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double u = sd * rng.normal();
    for (double xij : x[i]) {
      const double p = 1.0 / (1.0 + std::exp(-(beta * xij + u)));
      y[i].push_back(rng.uniform() < p ? 1 : 0);
    }
  }
  return make_glmm_model(x, std::move(y), beta, sigma2 > 0.0 ? sigma2 : 1.0);
}

namespace {

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

GlmmConfig parse_glmm_config(std::string_view json_text) {
  GlmmConfig c;
  try {
    const auto j = nlohmann::json::parse(json_text);
    const bool m_list = j.contains("m") && j["m"].is_array();
    const std::size_t q = j.value("q", m_list ? j["m"].size() : c.m.size());
    if (q == 0) throw ConfigError("q must be positive");
    if (m_list) {
      c.m = j["m"].get<std::vector<std::size_t>>();
      if (c.m.size() != q) throw ConfigError("m list must have q entries");
    } else {
      c.m.assign(q, j.value("m", std::size_t{15}));
    }
    c.beta = j.value("beta", c.beta);
    c.sigma2 = j.value("sigma2", c.sigma2);
    c.gen_beta = j.value("gen_beta", c.gen_beta);
    c.gen_sigma2 = j.value("gen_sigma2", c.gen_sigma2);
    c.data_seed = j.value("data_seed", c.data_seed);
    c.tau2 = parse_auto(j, "tau2");
    if (j.contains("b_multiplier")) {
      c.b_multipliers = j["b_multiplier"].get<std::vector<double>>();
    }
    c.preliminary_steps = j.value("preliminary_steps", c.preliminary_steps);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("GLMM config: ") + e.what());
  }
  for (auto mi : c.m) {
    if (mi == 0) throw ConfigError("every group needs at least one observation");
  }
  if (!(c.sigma2 > 0.0)) throw ConfigError("sigma2 must be positive");
  if (c.tau2 && !(*c.tau2 > 0.0)) throw ConfigError("tau2 must be positive");
  for (double b : c.b_multipliers) {
    if (!(b > 0.0)) throw ConfigError("b multipliers must be positive");
  }
  if (c.preliminary_steps < 2) throw ConfigError("preliminary_steps must be >= 2");
  return c;
}

GlmmModel build_glmm_model(const GlmmConfig& config) {
  RandomStream rng(config.data_seed, 0);
  GlmmModel model = glmm_simulate_data(glmm_grid_covariates(config.m),
                                       config.gen_beta, config.gen_sigma2, rng);
  model.beta = config.beta;
  model.sigma2 = config.sigma2;
  model.validate();
  return model;
}

double log1pexp(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double glmm_log_r_i(double u_i, std::size_t i, const GlmmModel& model) {
  double s = u_i * model.y_plus[i];
  for (double xij : model.x[i]) s -= log1pexp(model.beta * xij + u_i);
  return s;
}

double glmm_log_r(std::span<const double> u, const GlmmModel& model) {
  if (u.size() != model.q()) throw ConfigError("u must have q entries");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += glmm_log_r_i(u[i], i, model);
  return s;
}

double glmm_log_target(std::span<const double> u, const GlmmModel& model) {
  double s = glmm_log_r(u, model);
  for (double ui : u) s -= ui * ui / (2.0 * model.sigma2);
  return s;
}

std::vector<double> glmm_gradient(std::span<const double> u, const GlmmModel& model) {
  if (u.size() != model.q()) throw ConfigError("u must have q entries");
  std::vector<double> g(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    double p_plus = 0.0;
    for (double xij : model.x[i]) {
      p_plus += 1.0 / (1.0 + std::exp(-(model.beta * xij + u[i])));
    }
    g[i] = model.y_plus[i] - p_plus - u[i] / model.sigma2;
  }
  return g;
}

double glmm_complete_loglik(std::span<const double> u, const GlmmModel& model,
                            double beta, double sigma2) {
  if (u.size() != model.q()) throw ConfigError("u must have q entries");
  if (!(sigma2 > 0.0)) throw DomainError("sigma2 must be positive");
  double s = 0.0;
  double u2 = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    for (std::size_t j = 0; j < model.x[i].size(); ++j) {
      const double eta = beta * model.x[i][j] + u[i];
      s += model.y[i][j] * eta - log1pexp(eta);
    }
    u2 += u[i] * u[i];
  }
  const double q = static_cast<double>(u.size());
  return s - 0.5 * q * std::log(sigma2) - u2 / (2.0 * sigma2);
}

GlmmLogR::GlmmLogR(const GlmmModel& model) : model_(&model) {
  e_.resize(model.q());
  max_log_e_.assign(model.q(), 0.0);
  for (std::size_t i = 0; i < model.q(); ++i) {
    for (double xij : model.x[i]) {
      const double z = model.beta * xij;
      max_log_e_[i] = std::max(max_log_e_[i], z);
      e_[i].push_back(z < 500.0 ? std::exp(z) : 0.0);
    }
  }
}

double GlmmLogR::operator()(double u_i, std::size_t i) const {
  // Each factor stays below e^500 and the running product is folded into
  // the log sum before it passes 1e50.
  if (u_i + max_log_e_[i] > 500.0) return glmm_log_r_i(u_i, i, *model_);
  const double t = std::exp(u_i);
  double prod = 1.0;
  double acc = 0.0;
  for (double eij : e_[i]) {
    prod *= 1.0 + t * eij;
    if (prod > 1e50) {
      acc += std::log(prod);
      prod = 1.0;
    }
  }
  return u_i * model_->y_plus[i] - (acc + std::log(prod));
}

double glmm_cwis_regen_prob(std::span<const double> log_r_prev,
                            std::span<const double> log_r_curr,
                            std::span<const double> log_c) {
  double s = 0.0;
  for (std::size_t i = 0; i < log_c.size(); ++i) {
    const double f = std::min(0.0, log_c[i] - log_r_prev[i]) +
                     std::min(0.0, log_r_curr[i] - log_c[i]) -
                     std::min(0.0, log_r_curr[i] - log_r_prev[i]);
    if (f > std::log1p(kRegenTolerance)) {
      throw MinorizationViolation("GLMM regeneration factor exceeds one");
    }
    s += std::min(f, 0.0);
  }
  return std::exp(s);
}

double glmm_rw_log_split_factor(std::span<const double> u_prev,
                                std::span<const double> u_curr,
                                std::span<const double> u_tilde,
                                std::span<const double> b, double tau2) {
  double e = 0.0;
  for (std::size_t i = 0; i < u_curr.size(); ++i) {
    const double w = u_curr[i] - u_tilde[i];
    if (!(std::abs(w) < b[i])) return kNegInf;
    const double a = u_prev[i] - u_tilde[i];
    const double sgn = a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0);
    e += a * (w + b[i] * sgn);
  }
  return -e / tau2;
}

double glmm_rw_regen_prob(std::span<const double> u_prev,
                          std::span<const double> u_curr,
                          std::span<const double> u_tilde,
                          std::span<const double> b, double tau2, double log_c,
                          const GlmmModel& model) {
  const double f = glmm_rw_log_split_factor(u_prev, u_curr, u_tilde, b, tau2);
  if (f == kNegInf) return 0.0;
  if (f > std::log1p(kRegenTolerance)) {
    throw MinorizationViolation("random-walk split factor exceeds one");
  }
  return std::exp(std::min(f, 0.0)) *
         mty_regen_prob(glmm_log_target(u_prev, model),
                        glmm_log_target(u_curr, model), log_c);
}

TargetDensity make_glmm_target(const GlmmModel& model) {
  auto shared = std::make_shared<const GlmmModel>(model);
  auto log_pi = [shared](std::span<const double> u) {
    return glmm_log_target(u, *shared);
  };
  auto delta = [shared](std::span<const double> u, std::size_t i,
                        std::span<const double> c) {
    const double s2 = 2.0 * shared->sigma2;
    return glmm_log_r_i(c[0], i, *shared) - glmm_log_r_i(u[i], i, *shared) -
           (c[0] * c[0] - u[i] * u[i]) / s2;
  };
  return TargetDensity(std::vector<std::size_t>(model.q(), 1), log_pi, {}, delta);
}

std::vector<ComponentProposal> make_glmm_cwis_proposals(const GlmmModel& model) {
  const double sigma2 = model.sigma2;
  const double sd = std::sqrt(sigma2);
  std::vector<ComponentProposal> out;
  for (std::size_t i = 0; i < model.q(); ++i) {
    ComponentProposal p;
    p.index = i;
    p.state_independent = true;
    p.sample = [sd](std::span<const double>, RandomStream& rng,
                    std::span<double> cand) { cand[0] = sd * rng.normal(); };
    p.log_density = [sigma2](std::span<const double>, std::span<const double> c) {
      return -c[0] * c[0] / (2.0 * sigma2);
    };
    out.push_back(std::move(p));
  }
  return out;
}

MinorizationSpec glmm_minorization_spec(const GlmmModel& model,
                                        std::span<const double> log_c) {
  if (log_c.size() != model.q()) throw ConfigError("need one c_i per component");
  auto shared = std::make_shared<const GlmmModel>(model);
  MinorizationSpec spec;
  for (std::size_t i = 0; i < model.q(); ++i) {
    MinorizationSpec::Component c;
    c.q_is_proposal = true;
    auto r_i = [shared, i](std::span<const double> u) {
      return glmm_log_r_i(u[i], i, *shared);
    };
    c.log_g1 = r_i;
    c.log_h2 = r_i;
    c.log_c = -log_c[i];
    spec.components.push_back(std::move(c));
  }
  return spec;
}

TargetDensity make_glmm_joint_target(const GlmmModel& model) {
  auto shared = std::make_shared<const GlmmModel>(model);
  auto log_pi = [shared](std::span<const double> u) {
    return glmm_log_target(u, *shared);
  };
  return TargetDensity({model.q()}, log_pi);
}

ComponentProposal make_glmm_rw_proposal(std::size_t q, double tau2) {
  if (!(tau2 > 0.0)) throw ConfigError("tau2 must be positive");
  const double tau = std::sqrt(tau2);
  ComponentProposal p;
  p.index = 0;
  p.sample = [tau, q](std::span<const double> u, RandomStream& rng,
                      std::span<double> cand) {
    for (std::size_t i = 0; i < q; ++i) cand[i] = u[i] + tau * rng.normal();
  };
  p.log_density = [tau2](std::span<const double> u, std::span<const double> c) {
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) s += (c[i] - u[i]) * (c[i] - u[i]);
    return -s / (2.0 * tau2);
  };
  return p;
}

ComponentProposal make_glmm_mhis_proposal(const GlmmModel& model) {
  const double sigma2 = model.sigma2;
  const double sd = std::sqrt(sigma2);
  const std::size_t q = model.q();
  ComponentProposal p;
  p.index = 0;
  p.state_independent = true;
  p.sample = [sd, q](std::span<const double>, RandomStream& rng,
                     std::span<double> cand) {
    for (std::size_t i = 0; i < q; ++i) cand[i] = sd * rng.normal();
  };
  p.log_density = [sigma2](std::span<const double>, std::span<const double> c) {
    double s = 0.0;
    for (double v : c) s += v * v;
    return -s / (2.0 * sigma2);
  };
  return p;
}

std::vector<double> glmm_initial_state(const GlmmModel& model, RandomStream& rng) {
  const double sd = std::sqrt(model.sigma2);
  std::vector<double> u(model.q());
  for (auto& v : u) v = sd * rng.normal();
  return u;
}

GlmmChain::GlmmChain(const GlmmModel& model, GlmmSampler kind,
                     std::vector<double> u0, RandomStream rng, double tau2,
                     std::vector<double> log_c)
    : model_(&model),
      kind_(kind),
      log_r_fn_(model),
      u_(std::move(u0)),
      log_c_(std::move(log_c)),
      rng_(rng),
      regen_rng_(rng.lane(1)) {
  const std::size_t q = model.q();
  if (u_.size() != q) throw ConfigError("initial state must have q entries");
  if (kind == GlmmSampler::rw) {
    if (!(tau2 > 0.0)) throw ConfigError("random walk needs tau2 > 0");
    tau_ = std::sqrt(tau2);
  }
  if (kind == GlmmSampler::cwis && !log_c_.empty() && log_c_.size() != q) {
    throw ConfigError("need one c_i per component");
  }
  log_r_.resize(q);
  cand_.resize(q);
  cand_log_r_.resize(q);
  prev_log_r_.resize(q);
  accepted_.assign(q, 0);
  for (std::size_t i = 0; i < q; ++i) {
    log_r_[i] = log_r_fn_(u_[i], i);
    sum_log_r_ += log_r_[i];
    sum_u2_ += u_[i] * u_[i];
  }
  lc_const_ = model.beta * model.sum_xy() -
              0.5 * static_cast<double>(q) * std::log(model.sigma2);
}

double GlmmChain::log_pi() const {
  return sum_log_r_ - sum_u2_ / (2.0 * model_->sigma2);
}

double GlmmChain::complete_loglik() const {
  return sum_log_r_ + lc_const_ - sum_u2_ / (2.0 * model_->sigma2);
}

GlmmChain::Step GlmmChain::advance() {
  const std::size_t q = u_.size();
  const double s2 = model_->sigma2;
  const double sd = std::sqrt(s2);
  Step s;
  ++steps_;
  switch (kind_) {
    case GlmmSampler::cwis: {
      std::copy(log_r_.begin(), log_r_.end(), prev_log_r_.begin());
      bool all = true;
      for (std::size_t i = 0; i < q; ++i) {
        const double cand = sd * rng_.normal();
        const double lr = log_r_fn_(cand, i);
        const double diff = lr - log_r_[i];
        const double alpha = diff >= 0.0 ? 1.0 : std::exp(diff);
        if (rng_.uniform() < alpha) {
          u_[i] = cand;
          log_r_[i] = lr;
          ++accepted_[i];
        } else {
          all = false;
        }
      }
      sum_log_r_ = 0.0;
      sum_u2_ = 0.0;
      for (std::size_t i = 0; i < q; ++i) {
        sum_log_r_ += log_r_[i];
        sum_u2_ += u_[i] * u_[i];
      }
      s.all_accepted = all;
      if (all && !log_c_.empty()) {
        const double p = glmm_cwis_regen_prob(prev_log_r_, log_r_, log_c_);
        s.delta = regen_rng_.uniform() < p;
      }
      break;
    }
    case GlmmSampler::rw:
    case GlmmSampler::mhis: {
      double cand_sum_lr = 0.0;
      double cand_u2 = 0.0;
      for (std::size_t i = 0; i < q; ++i) {
        cand_[i] = kind_ == GlmmSampler::rw ? u_[i] + tau_ * rng_.normal()
                                            : sd * rng_.normal();
        cand_log_r_[i] = log_r_fn_(cand_[i], i);
        cand_sum_lr += cand_log_r_[i];
        cand_u2 += cand_[i] * cand_[i];
      }
      const double diff = kind_ == GlmmSampler::rw
                              ? (cand_sum_lr - cand_u2 / (2.0 * s2)) - log_pi()
                              : cand_sum_lr - sum_log_r_;
      const double alpha = diff >= 0.0 ? 1.0 : std::exp(diff);
      if (rng_.uniform() < alpha) {
        u_.swap(cand_);
        log_r_.swap(cand_log_r_);
        sum_log_r_ = cand_sum_lr;
        sum_u2_ = cand_u2;
        for (auto& a : accepted_) ++a;
        s.all_accepted = true;
      }
      break;
    }
  }
  s.g = complete_loglik();
  return s;
}

namespace {

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  return 0.5 * (*std::max_element(v.begin(), mid) + *mid);
}

}  // namespace

GlmmPreliminary glmm_preliminary_run(const GlmmModel& model, std::size_t n,
                                     RandomStream rng) {
  if (n < 2) throw ConfigError("preliminary run needs at least two steps");
  const std::size_t q = model.q();
  RandomStream init = rng.lane(3);
  GlmmChain chain(model, GlmmSampler::cwis, glmm_initial_state(model, init), rng);
  std::vector<std::vector<double>> log_r(q, std::vector<double>(n));
  std::vector<double> log_pi(n);
  std::vector<double> mean(q, 0.0), m2(q, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    chain.advance();
    log_pi[k] = chain.log_pi();
    for (std::size_t i = 0; i < q; ++i) {
      const double v = chain.u()[i];
      const double d = v - mean[i];
      mean[i] += d / static_cast<double>(k + 1);
      m2[i] += d * (v - mean[i]);
      log_r[i][k] = chain.log_r()[i];
    }
  }
  GlmmPreliminary out;
  out.u_tilde = mean;
  out.sd.resize(q);
  out.log_c.resize(q);
  for (std::size_t i = 0; i < q; ++i) {
    out.sd[i] = std::sqrt(m2[i] / static_cast<double>(n - 1));
    out.log_c[i] = median(std::move(log_r[i]));
  }
  out.log_c_pi = median(std::move(log_pi));
  return out;
}

}  // namespace vamh
