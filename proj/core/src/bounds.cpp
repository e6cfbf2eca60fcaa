#include "vamh/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>

#include <nlohmann/json.hpp>

#include "vamh/errors.hpp"

namespace vamh {

std::size_t DiscreteInstance::states() const {
  std::size_t n = 1;
  for (std::size_t k : supports) n *= k;
  return n;
}

bool DiscreteInstance::state_independent(std::size_t i) const {
  return proposals[i].size() == supports[i];
}

bool DiscreteInstance::all_state_independent() const {
  for (std::size_t i = 0; i < components(); ++i) {
    if (!state_independent(i)) return false;
  }
  return true;
}

double DiscreteInstance::proposal(std::size_t i, std::size_t state,
                                  std::size_t value) const {
  if (state_independent(i)) return proposals[i][value];
  return proposals[i][state * supports[i] + value];
}

double DiscreteInstance::joint_proposal(std::size_t state) const {
  const auto v = decode(state);
  double p = 1.0;
  for (std::size_t i = 0; i < components(); ++i) {
    if (!state_independent(i)) {
      throw ConfigError("joint proposal needs state-independent tables");
    }
    p *= proposals[i][v[i]];
  }
  return p;
}

std::vector<std::size_t> DiscreteInstance::decode(std::size_t state) const {
  std::vector<std::size_t> v(components());
  for (std::size_t i = components(); i-- > 0;) {
    v[i] = state % supports[i];
    state /= supports[i];
  }
  return v;
}

std::size_t DiscreteInstance::encode(std::span<const std::size_t> values) const {
  std::size_t s = 0;
  for (std::size_t i = 0; i < components(); ++i) s = s * supports[i] + values[i];
  return s;
}

std::size_t DiscreteInstance::replace(std::size_t state, std::size_t i,
                                      std::size_t value) const {
  auto v = decode(state);
  v[i] = value;
  return encode(v);
}

std::vector<std::size_t> DiscreteInstance::visiting_order() const {
  if (!order.empty()) return order;
  std::vector<std::size_t> o(components());
  std::iota(o.begin(), o.end(), 0);
  return o;
}

void DiscreteInstance::validate() const {
  const std::size_t d = components();
  if (d == 0) throw ConfigError("instance needs at least one component");
  for (std::size_t k : supports) {
    if (k == 0) throw ConfigError("empty component support");
  }
  const std::size_t n = states();
  if (n > kMaxDiscreteStates) {
    throw SizeError("instance has " + std::to_string(n) + " states; limit is " +
                    std::to_string(kMaxDiscreteStates));
  }
  if (pi.size() != n) throw ConfigError("pi must have one entry per state");
  double total = 0.0;
  for (double v : pi) {
    if (!(v >= 0.0)) throw ConfigError("pi entries must be nonnegative");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ConfigError("pi must sum to one");
  if (proposals.size() != d) throw ConfigError("one proposal table per component");
  for (std::size_t i = 0; i < d; ++i) {
    const auto& t = proposals[i];
    const std::size_t k = supports[i];
    if (t.size() != k && t.size() != n * k) {
      throw ConfigError("proposal table " + std::to_string(i) +
                        " has the wrong size");
    }
    for (std::size_t row = 0; row < t.size() / k; ++row) {
      double sum = 0.0;
      for (std::size_t v = 0; v < k; ++v) {
        if (!(t[row * k + v] >= 0.0)) throw ConfigError("negative proposal mass");
        sum += t[row * k + v];
      }
      if (std::abs(sum - 1.0) > 1e-12) {
        throw ConfigError("proposal rows must sum to one");
      }
    }
  }
  if (!order.empty()) {
    std::vector<bool> seen(d, false);
    if (order.size() != d) throw ConfigError("order must list every component");
    for (std::size_t i : order) {
      if (i >= d || seen[i]) throw ConfigError("order must be a permutation");
      seen[i] = true;
    }
  }
  if (all_state_independent()) {
    for (std::size_t s = 0; s < n; ++s) {
      if ((pi[s] > 0.0) != (joint_proposal(s) > 0.0)) {
        throw ConfigError("pi(x) > 0 must hold exactly when p(x) > 0");
      }
    }
  }
}

DiscreteInstance parse_discrete_instance(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("instance JSON: ") + e.what());
  }
  DiscreteInstance inst;
  try {
    inst.supports = j.at("supports").get<std::vector<std::size_t>>();
    inst.pi = j.at("pi").get<std::vector<double>>();
    for (const auto& t : j.at("proposals")) {
      if (t.is_array() && !t.empty() && t.front().is_array()) {
        std::vector<double> flat;
        for (const auto& row : t) {
          for (double v : row.get<std::vector<double>>()) flat.push_back(v);
        }
        inst.proposals.push_back(std::move(flat));
      } else {
        inst.proposals.push_back(t.get<std::vector<double>>());
      }
    }
    if (j.contains("order")) inst.order = j["order"].get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("instance JSON: ") + e.what());
  }
  inst.validate();
  return inst;
}

namespace {

void check_unit_interval(double v, const char* name) {
  if (!(v > 0.0 && v <= 1.0)) {
    throw DomainError(std::string(name) + " must lie in (0, 1]");
  }
}

}  // namespace

double tv_bound_composition(std::span<const double> eps_i, double C,
                            std::size_t n) {
  check_unit_interval(C, "C");
  double prod = C;
  for (double e : eps_i) {
    check_unit_interval(e, "eps_i");
    prod *= e;
  }
  return std::pow(1.0 - prod, static_cast<double>(n));
}

double tv_bound_mixing(double eps, std::span<const double> r, std::size_t n) {
  check_unit_interval(eps, "eps");
  validate_mixing_weights(r, r.size());
  double prod = eps;
  for (double w : r) prod *= w;
  return std::pow(1.0 - prod, static_cast<double>(n));
}

double tv_bound_cwis(double delta, double eps, std::size_t d, std::size_t n) {
  check_unit_interval(delta, "delta");
  check_unit_interval(eps, "eps");
  const double rho = delta * std::pow(eps, static_cast<double>(d / 2));
  return std::pow(1.0 - rho, static_cast<double>(n));
}

Matrix component_update_matrix(const DiscreteInstance& inst, std::size_t i) {
  const std::size_t n = inst.states();
  if (n > kMaxDiscreteStates) throw SizeError("too many states to enumerate");
  Matrix K = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t x = 0; x < n; ++x) {
    const auto xi = static_cast<Eigen::Index>(x);
    if (inst.pi[x] <= 0.0) {
      K(xi, xi) = 1.0;
      continue;
    }
    const std::size_t current = inst.decode(x)[i];
    double moved = 0.0;
    for (std::size_t v = 0; v < inst.supports[i]; ++v) {
      if (v == current) continue;
      const double p_xy = inst.proposal(i, x, v);
      if (p_xy <= 0.0) continue;
      const std::size_t y = inst.replace(x, i, v);
      const double p_yx = inst.proposal(i, y, current);
      const double alpha =
          std::min(1.0, inst.pi[y] * p_yx / (inst.pi[x] * p_xy));
      K(xi, static_cast<Eigen::Index>(y)) = p_xy * alpha;
      moved += p_xy * alpha;
    }
    K(xi, xi) = 1.0 - moved;
  }
  return K;
}

Matrix exact_kernel_matrix(const DiscreteInstance& inst, DiscreteKernel kind,
                           std::span<const double> weights) {
  inst.validate();
  const std::size_t n = inst.states();
  const auto N = static_cast<Eigen::Index>(n);
  switch (kind) {
    case DiscreteKernel::cwis:
      if (!inst.all_state_independent()) {
        throw ConfigError("cwis kernel needs state-independent proposals");
      }
      [[fallthrough]];
    case DiscreteKernel::composition: {
      Matrix P = Matrix::Identity(N, N);
      for (std::size_t i : inst.visiting_order()) {
        P = P * component_update_matrix(inst, i);
      }
      return P;
    }
    case DiscreteKernel::mixing: {
      validate_mixing_weights(weights, inst.components());
      Matrix P = Matrix::Zero(N, N);
      for (std::size_t i = 0; i < inst.components(); ++i) {
        P += weights[i] * component_update_matrix(inst, i);
      }
      return P;
    }
    case DiscreteKernel::single_block_independence: {
      Matrix P = Matrix::Zero(N, N);
      for (std::size_t x = 0; x < n; ++x) {
        const auto xi = static_cast<Eigen::Index>(x);
        if (inst.pi[x] <= 0.0) {
          P(xi, xi) = 1.0;
          continue;
        }
        const double px = inst.joint_proposal(x);
        double moved = 0.0;
        for (std::size_t y = 0; y < n; ++y) {
          if (y == x) continue;
          const double py = inst.joint_proposal(y);
          if (py <= 0.0) continue;
          const double alpha = std::min(1.0, inst.pi[y] * px / (inst.pi[x] * py));
          P(xi, static_cast<Eigen::Index>(y)) = py * alpha;
          moved += py * alpha;
        }
        P(xi, xi) = 1.0 - moved;
      }
      return P;
    }
  }
  throw ConfigError("unknown kernel kind");
}

Eigen::VectorXd stationary_vector(const Matrix& kernel) {
  Matrix Q = kernel;
  for (int iter = 0; iter < 64; ++iter) {
    double spread = 0.0;
    for (Eigen::Index r = 1; r < Q.rows(); ++r) {
      spread = std::max(spread, (Q.row(r) - Q.row(0)).cwiseAbs().maxCoeff());
    }
    if (spread < 1e-13) {
      Eigen::VectorXd pi = Q.colwise().mean().transpose();
      return pi / pi.sum();
    }
    Q = Q * Q;
  }
  throw ConsistencyError("kernel powers did not converge (periodic or reducible)");
}

std::vector<double> exact_tv_curve(const DiscreteInstance& inst,
                                   const Matrix& kernel, std::size_t n_max,
                                   std::size_t start, std::size_t stride) {
  const Eigen::Index N = kernel.rows();
  if (static_cast<std::size_t>(N) != inst.states()) {
    throw ConfigError("kernel size does not match instance");
  }
  for (Eigen::Index r = 0; r < N; ++r) {
    if (std::abs(kernel.row(r).sum() - 1.0) > 1e-10) {
      throw ConsistencyError("kernel row does not sum to one");
    }
  }
  const Eigen::VectorXd pi = stationary_vector(kernel);
  for (Eigen::Index k = 0; k < N; ++k) {
    if (std::abs(pi(k) - inst.pi[static_cast<std::size_t>(k)]) > 1e-8) {
      throw ConsistencyError("kernel's stationary vector differs from pi");
    }
  }
  Matrix step = kernel;
  for (std::size_t s = 1; s < stride; ++s) step = step * kernel;

  Eigen::RowVectorXd dist = Eigen::RowVectorXd::Zero(N);
  dist(static_cast<Eigen::Index>(start)) = 1.0;
  std::vector<double> tv;
  tv.reserve(n_max);
  for (std::size_t n = 1; n <= n_max; ++n) {
    dist = dist * step;
    tv.push_back(0.5 * (dist.transpose() - pi).cwiseAbs().sum());
  }
  return tv;
}

std::vector<double> exact_tv_curve_sup(const DiscreteInstance& inst,
                                       const Matrix& kernel, std::size_t n_max,
                                       std::size_t stride) {
  std::vector<double> sup(n_max, 0.0);
  for (std::size_t x = 0; x < inst.states(); ++x) {
    const auto curve = exact_tv_curve(inst, kernel, n_max, x, stride);
    for (std::size_t n = 0; n < n_max; ++n) sup[n] = std::max(sup[n], curve[n]);
  }
  return sup;
}

namespace {

// State whose first `pos` visited components come from `y` and the rest
// from `x`.
std::size_t splice(const DiscreteInstance& inst,
                   const std::vector<std::size_t>& order, std::size_t x,
                   std::size_t y, std::size_t pos) {
  auto xv = inst.decode(x);
  const auto yv = inst.decode(y);
  for (std::size_t k = 0; k < pos; ++k) xv[order[k]] = yv[order[k]];
  return inst.encode(xv);
}

}  // namespace

BoundConstants composition_constants(const DiscreteInstance& inst) {
  inst.validate();
  const std::size_t n = inst.states();
  const std::size_t d = inst.components();
  const auto order = inst.visiting_order();
  std::vector<Matrix> K;
  for (std::size_t i = 0; i < d; ++i) K.push_back(component_update_matrix(inst, i));

  // q[k][y] = min_x f_k(x, y), a function of y's first k+1 visited components.
  std::vector<std::vector<double>> q(d, std::vector<double>(n, 1.0));
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t y = 0; y < n; ++y) {
      double lo = 1.0;
      for (std::size_t x = 0; x < n; ++x) {
        const auto before = static_cast<Eigen::Index>(splice(inst, order, x, y, k));
        const auto after = static_cast<Eigen::Index>(splice(inst, order, x, y, k + 1));
        lo = std::min(lo, K[order[k]](before, after));
      }
      q[k][y] = lo;
    }
  }
  BoundConstants c;
  c.eps_i.assign(d, 1.0);
  for (std::size_t y = 0; y < n; ++y) {
    double prod = 1.0;
    for (std::size_t k = 0; k < d; ++k) prod *= q[k][y];
    c.C += prod;
  }
  return c;
}

double doeblin_constant(const Matrix& kernel) {
  return kernel.colwise().minCoeff().sum();
}

double independence_delta(const DiscreteInstance& inst) {
  double delta = 1.0;
  bool any = false;
  for (std::size_t x = 0; x < inst.states(); ++x) {
    if (inst.pi[x] <= 0.0) continue;
    const double ratio = inst.joint_proposal(x) / inst.pi[x];
    delta = any ? std::min(delta, ratio) : ratio;
    any = true;
  }
  return delta;
}

double cwis_cross_ratio_epsilon(const DiscreteInstance& inst) {
  const std::size_t n = inst.states();
  const std::size_t d = inst.components();
  std::vector<std::size_t> natural(d);
  std::iota(natural.begin(), natural.end(), 0);
  double eps = 1.0;
  for (std::size_t x = 0; x < n; ++x) {
    if (inst.pi[x] <= 0.0) continue;
    for (std::size_t y = 0; y < n; ++y) {
      if (inst.pi[y] <= 0.0) continue;
      for (std::size_t k = 1; k < d; ++k) {
        // (x_[k], y^[k+1]) and (y_[k], x^[k+1])
        const std::size_t xy = splice(inst, natural, y, x, k);
        const std::size_t yx = splice(inst, natural, x, y, k);
        const double den = inst.pi[xy] * inst.pi[yx];
        if (den <= 0.0) return 0.0;
        eps = std::min(eps, inst.pi[x] * inst.pi[y] / den);
      }
    }
  }
  return eps;
}

double all_accepted_probability(const DiscreteInstance& inst, std::size_t from,
                                std::size_t to) {
  const auto order = inst.visiting_order();
  const auto target = inst.decode(to);
  double prob = 1.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t i = order[k];
    const std::size_t before = splice(inst, order, from, to, k);
    const std::size_t after = splice(inst, order, from, to, k + 1);
    const double p_fwd = inst.proposal(i, before, target[i]);
    if (p_fwd <= 0.0 || inst.pi[before] <= 0.0) return 0.0;
    const double p_rev = inst.proposal(i, after, inst.decode(before)[i]);
    const double alpha =
        std::min(1.0, inst.pi[after] * p_rev / (inst.pi[before] * p_fwd));
    prob *= p_fwd * alpha;
  }
  return prob;
}

double exact_split_identity_check(const DiscreteInstance& inst,
                                  DiscreteKernel kind,
                                  std::span<const double> s,
                                  std::span<const double> q,
                                  const RegenRule& regen) {
  inst.validate();
  const std::size_t n = inst.states();
  if (s.size() != n || q.size() != n) {
    throw ConfigError("s and q need one entry per state");
  }
  double worst = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    if (inst.pi[x] <= 0.0) continue;
    for (std::size_t y = 0; y < n; ++y) {
      double accepted_mass = 0.0;
      if (kind == DiscreteKernel::single_block_independence) {
        const double py = inst.joint_proposal(y);
        if (py > 0.0) {
          accepted_mass =
              py * std::min(1.0, inst.pi[y] * inst.joint_proposal(x) /
                                     (inst.pi[x] * py));
        }
      } else {
        accepted_mass = all_accepted_probability(inst, x, y);
      }
      const double joint = accepted_mass > 0.0 ? accepted_mass * regen(x, y) : 0.0;
      worst = std::max(worst, std::abs(joint - s[x] * q[y]));
    }
  }
  return worst;
}

TargetDensity make_discrete_target(const DiscreteInstance& inst) {
  auto shared = std::make_shared<const DiscreteInstance>(inst);
  std::vector<std::size_t> dims(inst.components(), 1);
  auto log_pi = [shared](std::span<const double> x) {
    std::vector<std::size_t> v(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) v[i] = static_cast<std::size_t>(x[i]);
    const double p = shared->pi[shared->encode(v)];
    return p > 0.0 ? std::log(p) : kNegInf;
  };
  auto support = [shared](std::size_t i, std::span<const double> c) {
    return c[0] >= 0.0 && c[0] < static_cast<double>(shared->supports[i]) &&
           c[0] == std::floor(c[0]);
  };
  return TargetDensity(std::move(dims), log_pi, support);
}

std::vector<ComponentProposal> make_discrete_proposals(const DiscreteInstance& inst) {
  auto shared = std::make_shared<const DiscreteInstance>(inst);
  auto index_of = [shared](std::span<const double> x) {
    std::vector<std::size_t> v(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) v[i] = static_cast<std::size_t>(x[i]);
    return shared->encode(v);
  };
  std::vector<ComponentProposal> out;
  for (std::size_t i = 0; i < inst.components(); ++i) {
    ComponentProposal p;
    p.index = i;
    p.state_independent = inst.state_independent(i);
    p.sample = [shared, index_of, i](std::span<const double> x, RandomStream& rng,
                                     std::span<double> cand) {
      const std::size_t s = index_of(x);
      const double u = rng.uniform();
      const std::size_t k = shared->supports[i];
      double cum = 0.0;
      std::size_t v = k - 1;
      for (std::size_t j = 0; j < k; ++j) {
        cum += shared->proposal(i, s, j);
        if (u < cum) {
          v = j;
          break;
        }
      }
      cand[0] = static_cast<double>(v);
    };
    p.log_density = [shared, index_of, i](std::span<const double> x,
                                          std::span<const double> cand) {
      const double pr =
          shared->proposal(i, index_of(x), static_cast<std::size_t>(cand[0]));
      return pr > 0.0 ? std::log(pr) : kNegInf;
    };
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace vamh
