#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "vamh/chain.hpp"

namespace vamh {

/// A finite product space with an exact target and component proposal tables.
///
/// States are encoded row-major with the last component varying fastest.
/// proposals[i] holds either |X_i| probabilities (a state-independent
/// proposal) or states() * |X_i| probabilities whose row is selected by the
/// current full state.
struct DiscreteInstance {
  std::vector<std::size_t> supports;
  std::vector<double> pi;
  std::vector<std::vector<double>> proposals;
  std::vector<std::size_t> order;  // composition visiting order; empty = 0..d-1

  std::size_t components() const { return supports.size(); }
  std::size_t states() const;
  bool state_independent(std::size_t i) const;
  bool all_state_independent() const;
  double proposal(std::size_t i, std::size_t state, std::size_t value) const;
  /// Product of the component proposals; needs state-independent tables.
  double joint_proposal(std::size_t state) const;

  std::vector<std::size_t> decode(std::size_t state) const;
  std::size_t encode(std::span<const std::size_t> values) const;
  std::size_t replace(std::size_t state, std::size_t i, std::size_t value) const;
  std::vector<std::size_t> visiting_order() const;

  /// Checks normalization (1e-12) and, for state-independent proposals,
  /// that pi(x) > 0 exactly when the product proposal is positive.
  void validate() const;
};

/// Parses {"supports": [...], "pi": [...], "proposals": [[...], ...],
/// "order": [...]} and validates the result.
DiscreteInstance parse_discrete_instance(std::string_view json_text);

struct BoundConstants {
  std::vector<double> eps_i;  // composition minorization constants
  double C = 0.0;             // integral of the product of the q_i
  double delta = 0.0;         // p(x) >= delta pi(x)
  double eps = 0.0;           // cross-ratio constant (CWIS) or Doeblin constant
  std::vector<double> r;      // mixing weights
};

/// (1 - C eps_1 ... eps_d)^n.
double tv_bound_composition(std::span<const double> eps_i, double C,
                            std::size_t n);
/// (1 - eps r_1 ... r_d)^n; holds after n * d raw mixing steps.
double tv_bound_mixing(double eps, std::span<const double> r, std::size_t n);
/// (1 - delta eps^floor(d/2))^n.
double tv_bound_cwis(double delta, double eps, std::size_t d, std::size_t n);

enum class DiscreteKernel { composition, mixing, cwis, single_block_independence };

using Matrix = Eigen::MatrixXd;

inline constexpr std::size_t kMaxDiscreteStates = 10000;

/// Transition matrix of the Metropolis-Hastings update of component i alone.
Matrix component_update_matrix(const DiscreteInstance& inst, std::size_t i);

/// Exact one-step transition matrix. Mixing needs one weight per component.
Matrix exact_kernel_matrix(const DiscreteInstance& inst, DiscreteKernel kind,
                           std::span<const double> weights = {});

/// Stationary distribution via repeated squaring of P until all rows agree
/// to 1e-13.
Eigen::VectorXd stationary_vector(const Matrix& kernel);

/// TV(P^k(start, .), pi) for k = stride, 2 stride, ..., n_max stride. pi is
/// the kernel's stationary vector, which must match inst.pi to 1e-8.
std::vector<double> exact_tv_curve(const DiscreteInstance& inst,
                                   const Matrix& kernel, std::size_t n_max,
                                   std::size_t start, std::size_t stride = 1);

/// Pointwise maximum of exact_tv_curve over all starting states.
std::vector<double> exact_tv_curve_sup(const DiscreteInstance& inst,
                                       const Matrix& kernel, std::size_t n_max,
                                       std::size_t stride = 1);

/// Composition-bound constants by exhaustive minimization: q_i(y_[i]) is
/// the minimum over x of the i-th update density, eps_i = 1, C = sum of
/// the products. Uses the instance's visiting order.
BoundConstants composition_constants(const DiscreteInstance& inst);

/// sum_y min_x P(x, y): the largest eps with P(x, .) >= eps Q(.).
double doeblin_constant(const Matrix& kernel);

/// min over the support of p(x) / pi(x).
double independence_delta(const DiscreteInstance& inst);

/// min over x, y and split points k = 1..d-1 of
/// pi(x) pi(y) / (pi(x_[k], y^[k+1]) pi(y_[k], x^[k+1])); 1 when d = 1.
double cwis_cross_ratio_epsilon(const DiscreteInstance& inst);

/// Regeneration probability for an accepted jump between two state indices.
using RegenRule = std::function<double(std::size_t from, std::size_t to)>;

/// Enumerates every all-proposals-accepted path and returns
/// max_{x,y} |Pr(X' = y, regeneration | x) - s(x) q(y)|.
/// kind selects composition-style (all component proposals accepted) or
/// single-block independence sampling.
double exact_split_identity_check(const DiscreteInstance& inst,
                                  DiscreteKernel kind,
                                  std::span<const double> s,
                                  std::span<const double> q,
                                  const RegenRule& regen);

/// Probability that every component proposal on the jump x -> y is
/// accepted and lands on y (composition order of the instance).
double all_accepted_probability(const DiscreteInstance& inst, std::size_t from,
                                std::size_t to);

/// TargetDensity over the instance with one scalar (integer valued) entry
/// per component.
TargetDensity make_discrete_target(const DiscreteInstance& inst);

/// Categorical component proposals drawing from the instance tables with a
/// single uniform each.
std::vector<ComponentProposal> make_discrete_proposals(const DiscreteInstance& inst);

}  // namespace vamh
