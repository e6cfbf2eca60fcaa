#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "vamh/chain.hpp"
#include "vamh/random.hpp"
#include "vamh/regen.hpp"

namespace vamh {

/// Logit-normal GLMM: y_ij ~ Bernoulli(logistic(beta x_ij + u_i)),
/// u_i ~ N(0, sigma2). beta and sigma2 are the parameter value at which
/// the conditional law of u given y is targeted.
struct GlmmModel {
  std::vector<std::vector<double>> x;
  std::vector<std::vector<std::uint8_t>> y;
  std::vector<double> y_plus;
  double beta = 4.0;
  double sigma2 = 1.5;

  std::size_t q() const { return x.size(); }
  /// sum_ij x_ij y_ij
  double sum_xy() const;
  void validate() const;
};

/// Builds the model and its y_plus sums; validates shapes and 0/1 responses.
GlmmModel make_glmm_model(std::vector<std::vector<double>> x,
                          std::vector<std::vector<std::uint8_t>> y, double beta,
                          double sigma2);

/// x_ij = j / m_i for j = 1..m_i.
std::vector<std::vector<double>> glmm_grid_covariates(std::span<const std::size_t> m);

/// Draws u_i ~ N(0, sigma2) then y_ij ~ Bernoulli(logistic(beta x_ij + u_i)),
/// one normal per group followed by one uniform per response. The returned
/// model targets (beta, sigma2) until reassigned.
GlmmModel glmm_simulate_data(const std::vector<std::vector<double>>& x,
                             double beta, double sigma2, RandomStream& rng);

struct GlmmConfig {
  std::vector<std::size_t> m = std::vector<std::size_t>(10, 15);
  double gen_beta = 5.0;
  double gen_sigma2 = 0.5;
  double beta = 4.0;
  double sigma2 = 1.5;
  std::uint64_t data_seed = 1;
  std::optional<double> tau2;  // empty: sigma2 / 10
  std::vector<double> b_multipliers{0.3, 0.5, 1.0, 1.5, 2.0, 2.5};
  std::size_t preliminary_steps = 100000;

  double rw_tau2() const { return tau2 ? *tau2 : sigma2 / 10.0; }
};

/// Keys q, m (scalar or list; a list sets q), beta, sigma2, gen_beta,
/// gen_sigma2, data_seed, tau2 ("auto" | number), b_multiplier (list),
/// preliminary_steps.
GlmmConfig parse_glmm_config(std::string_view json_text);

/// Simulates the data set of a config (stream data_seed, id 0).
GlmmModel build_glmm_model(const GlmmConfig& config);

/// log(1 + e^z) without overflow.
double log1pexp(double z);

/// log r_i(u_i) = u_i y_i+ - sum_j log(1 + e^{beta x_ij + u_i}).
double glmm_log_r_i(double u_i, std::size_t i, const GlmmModel& model);
double glmm_log_r(std::span<const double> u, const GlmmModel& model);
double glmm_log_target(std::span<const double> u, const GlmmModel& model);
/// d/du_i log pi = y_i+ - p_i+ - u_i / sigma2.
std::vector<double> glmm_gradient(std::span<const double> u, const GlmmModel& model);
/// Complete-data log-likelihood l_c(beta, sigma2; y, u).
double glmm_complete_loglik(std::span<const double> u, const GlmmModel& model,
                            double beta, double sigma2);

/// log r_i via prod_j (1 + e^{u_i} E_ij) with E_ij = e^{beta x_ij}, one
/// exp and one log per call; falls back to the term-wise sum when the
/// product could overflow.
class GlmmLogR {
 public:
  explicit GlmmLogR(const GlmmModel& model);
  double operator()(double u_i, std::size_t i) const;

 private:
  const GlmmModel* model_;
  std::vector<std::vector<double>> e_;
  std::vector<double> max_log_e_;
};

/// prod_i min{c_i/r_i(u_i'), 1} min{r_i(u_i)/c_i, 1} / min{r_i(u_i)/r_i(u_i'), 1}
/// from cached log r_i values.
double glmm_cwis_regen_prob(std::span<const double> log_r_prev,
                            std::span<const double> log_r_curr,
                            std::span<const double> log_c);

/// log s(u') q(u) / p(u', u) for the Gaussian random walk with the hypercube
/// D = {|u_i - u_tilde_i| < b_i}; -inf when u lies outside D.
double glmm_rw_log_split_factor(std::span<const double> u_prev,
                                std::span<const double> u_curr,
                                std::span<const double> u_tilde,
                                std::span<const double> b, double tau2);

/// Split factor times the three-case factor on pi with constant c.
double glmm_rw_regen_prob(std::span<const double> u_prev,
                          std::span<const double> u_curr,
                          std::span<const double> u_tilde,
                          std::span<const double> b, double tau2, double log_c,
                          const GlmmModel& model);

/// q one-dimensional components with a component-wise log-density delta.
TargetDensity make_glmm_target(const GlmmModel& model);
/// u_i* ~ N(0, sigma2) for each component.
std::vector<ComponentProposal> make_glmm_cwis_proposals(const GlmmModel& model);
/// s_i = 1, q_i = p_i, g_i1 = h_i2 = r_i, eq. constant 1 / c_i.
MinorizationSpec glmm_minorization_spec(const GlmmModel& model,
                                        std::span<const double> log_c);
/// One block of dimension q, for the random walk and the MHIS.
TargetDensity make_glmm_joint_target(const GlmmModel& model);
ComponentProposal make_glmm_rw_proposal(std::size_t q, double tau2);
ComponentProposal make_glmm_mhis_proposal(const GlmmModel& model);

/// U^(0) ~ N_q(0, sigma2 I).
std::vector<double> glmm_initial_state(const GlmmModel& model, RandomStream& rng);

enum class GlmmSampler { rw, mhis, cwis };

/// Fast chain with cached log r_i. Each update draws its proposal normals,
/// then one uniform; CWIS regeneration draws come from lane 1.
class GlmmChain {
 public:
  GlmmChain(const GlmmModel& model, GlmmSampler kind, std::vector<double> u0,
            RandomStream rng, double tau2 = 0.0, std::vector<double> log_c = {});

  struct Step {
    bool delta = false;
    bool all_accepted = false;
    double g = 0.0;
  };

  Step advance();
  std::span<const double> u() const { return u_; }
  std::span<const double> log_r() const { return log_r_; }
  double log_pi() const;
  /// l_c at the model's (beta, sigma2).
  double complete_loglik() const;
  std::size_t accepted(std::size_t i) const { return accepted_[i]; }
  std::size_t steps() const { return steps_; }

 private:
  const GlmmModel* model_;
  GlmmSampler kind_;
  GlmmLogR log_r_fn_;
  std::vector<double> u_;
  std::vector<double> log_r_;
  std::vector<double> cand_;
  std::vector<double> cand_log_r_;
  std::vector<double> prev_log_r_;
  std::vector<double> log_c_;
  double tau_ = 0.0;
  double sum_log_r_ = 0.0;
  double sum_u2_ = 0.0;
  double lc_const_ = 0.0;
  RandomStream rng_;
  RandomStream regen_rng_;
  std::vector<std::size_t> accepted_;
  std::size_t steps_ = 0;
};

/// Constants from a preliminary CWIS run: per-component means and standard
/// deviations, medians of log r_i, and the median of log pi.
struct GlmmPreliminary {
  std::vector<double> u_tilde;
  std::vector<double> sd;
  std::vector<double> log_c;
  double log_c_pi = 0.0;
};

GlmmPreliminary glmm_preliminary_run(const GlmmModel& model, std::size_t n,
                                     RandomStream rng);

}  // namespace vamh
