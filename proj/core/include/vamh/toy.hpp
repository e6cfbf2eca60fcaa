#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "vamh/chain.hpp"
#include "vamh/random.hpp"
#include "vamh/regen.hpp"

namespace vamh {

/// Normal sample with unknown mean mu and variance theta, flat prior on
/// mu in A and 1/sqrt(theta) prior on theta in B. Intervals are open.
struct ToyModel {
  double m = 10.0;
  double y_bar = 10.2;
  double s2 = 6.5;
  double a_lo = 0.0;
  double a_hi = 100.0;
  double b_lo = 0.0;
  double b_hi = std::numeric_limits<double>::infinity();

  /// m >= 2, s2 > 0, finite A with a_lo < a_hi, 0 <= b_lo < b_hi.
  void validate() const;
  bool in_a(double mu) const { return mu > a_lo && mu < a_hi; }
  bool in_b(double theta) const { return theta > b_lo && theta < b_hi; }
  /// Endpoint of A farthest from y_bar.
  double mu_far() const;
};

/// How an unset theta_tilde is filled in from the preliminary CWIS run.
enum class ThetaTildeRule {
  rate_optimal,  // quantile cutoff maximizing the empirical regeneration rate
  median,        // median of theta
};

struct ToyConfig {
  ToyModel model;
  std::optional<double> theta_tilde;  // empty: chosen by theta_tilde_rule
  ThetaTildeRule theta_tilde_rule = ThetaTildeRule::rate_optimal;
  std::optional<double> c;            // empty: median of pi/p from a preliminary run
  double mu0 = 10.0;
  double theta0 = 1.0;
};

/// Keys m, y_bar, s2, A = [lo, hi], B = [lo, hi | "inf"],
/// theta_tilde ("auto" | "median" | number), c ("auto" | number),
/// start = [mu, theta].
ToyConfig parse_toy_config(std::string_view json_text);

double toy_log_target(double mu, double theta, const ToyModel& model);

/// Unnormalized log proposal densities: N(y_bar, s2/m) for mu and
/// IG((m-1)/2, s2/2) for theta.
double toy_log_p1(double mu, const ToyModel& model);
double toy_log_p2(double theta, const ToyModel& model);

/// log of pi/p1, pi/p2 and pi/(p1 p2) with the constants used throughout.
double toy_log_r1(double mu, double theta, const ToyModel& model);
double toy_log_r2(double mu, double theta, const ToyModel& model);
double toy_log_w(double mu, double theta, const ToyModel& model);

inline constexpr std::size_t kMaxRejections = 1000000;

/// Rejection from N(mean, sd^2) until the draw lands in (lo, hi).
double sample_truncated_normal(double mean, double sd, double lo, double hi,
                               RandomStream& rng);
/// Rejection from IG(shape, rate), drawn as rate / Gamma(shape), until the
/// draw lands in (lo, hi).
double sample_truncated_invgamma(double shape, double rate, double lo,
                                 double hi, RandomStream& rng);

double toy_propose_mu(const ToyModel& model, RandomStream& rng);
double toy_propose_theta(const ToyModel& model, RandomStream& rng);

double toy_mhis_accept(double mu, double theta, double mu_star,
                       double theta_star, const ToyModel& model);
double toy_cwis_accept_mu(double mu, double mu_star, double theta,
                          const ToyModel& model);
double toy_cwis_accept_theta(double theta, double theta_star, double mu,
                             const ToyModel& model);

double toy_log_g1(double mu, double theta_tilde, const ToyModel& model);
double toy_log_g2(double theta, double theta_tilde, const ToyModel& model);

/// Component-wise minorization with g1, g2 from the theta-tilde cut, h = 1
/// and unit constants. Components are (mu, theta) in that order.
MinorizationSpec toy_minorization_spec(const ToyModel& model, double theta_tilde);

/// Closed-form regeneration probability for the CWIS on an accepted jump
/// (mu', theta') -> (mu, theta).
double toy_cwis_regen_prob(double mu_prev, double theta_prev, double mu,
                           double theta, double theta_tilde,
                           const ToyModel& model);

/// Two-component target over (mu, theta) and the matching CWIS proposals.
TargetDensity make_toy_target(const ToyModel& model);
std::vector<ComponentProposal> make_toy_cwis_proposals(const ToyModel& model);
/// One-component target with the joint (mu, theta) block, for the MHIS.
TargetDensity make_toy_joint_target(const ToyModel& model);
ComponentProposal make_toy_mhis_proposal(const ToyModel& model);

inline double toy_icv(double mu, double theta) { return mu / std::sqrt(theta); }

/// E_pi f(mu, theta) by nested adaptive Gauss-Kronrod quadrature with
/// relative tolerance 1e-8. Throws OracleError when the error estimate
/// exceeds the tolerance.
double toy_posterior_expectation(const ToyModel& model,
                                 const std::function<double(double, double)>& f);
/// log of the posterior normalizing constant, by the same quadrature.
double toy_log_posterior_normalizer(const ToyModel& model);
/// log of the normalizing constant of p1 * p2 restricted to A x B.
double toy_log_proposal_normalizer(const ToyModel& model);
/// E(mu / sqrt(theta) | y).
double oracle_posterior_mean_icv(const ToyModel& model);

/// delta with p >= delta pi for the normalized MHIS proposal.
double toy_mhis_delta(const ToyModel& model);
/// Cross-ratio constant exp{-m (mu_far - y_bar)^2 / (2 theta_*)}; needs b_lo > 0.
double toy_cwis_epsilon(const ToyModel& model);

enum class ToySampler { mhis, cwis };

struct ToyRegenConstants {
  double theta_tilde = 0.0;
  double log_c = 0.0;
};

/// Fills in theta_tilde (from a CWIS run, per theta_tilde_rule) and log c
/// (median log pi/p of an MHIS run) from preliminary runs of n steps unless
/// the config fixes them.
ToyRegenConstants toy_regen_constants(const ToyConfig& config, std::size_t n,
                                      RandomStream& rng);

/// Split chain for the toy model. Draws match the generic machinery: each
/// update consumes its proposal draws then one uniform from the chain
/// stream; regeneration draws come from lane 1.
class ToyChain {
 public:
  ToyChain(const ToyModel& model, ToySampler kind, ToyRegenConstants constants,
           double mu0, double theta0, RandomStream rng);

  struct Step {
    bool delta = false;
    bool all_accepted = false;
    double g = 0.0;
  };

  Step advance();
  double mu() const { return mu_; }
  double theta() const { return theta_; }
  std::size_t accepted(std::size_t component) const { return accepted_[component]; }
  std::size_t steps() const { return steps_; }

 private:
  ToyModel model_;
  ToySampler kind_;
  ToyRegenConstants k_;
  double mu_;
  double theta_;
  RandomStream rng_;
  RandomStream regen_rng_;
  std::size_t accepted_[2] = {0, 0};
  std::size_t steps_ = 0;
};

/// n steps of ToyChain recorded with g = mu / sqrt(theta).
SplitTrace run_toy_split_chain(const ToyModel& model, ToySampler kind,
                               const ToyRegenConstants& constants, double mu0,
                               double theta0, std::size_t n, RandomStream rng);

}  // namespace vamh
