#include <doctest.h>

#include <cmath>

#include "instances.hpp"
#include "vamh/bounds.hpp"
#include "vamh/errors.hpp"
#include "vamh/regen.hpp"
#include "vamh/toy.hpp"

using namespace vamh;

namespace {

double mty(double w_prev, double w_curr, double c) {
  return mty_regen_prob(std::log(w_prev), std::log(w_curr), std::log(c));
}

std::vector<std::uint8_t> flags(std::initializer_list<int> v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("MTY regeneration probability") {
  const double c = 3.0;
  CHECK(mty(c, c, c) == doctest::Approx(1.0));
  // both below c: max{w}/c
  CHECK(mty(0.2 * c, 0.5 * c, c) == doctest::Approx(0.5));
  CHECK(mty(0.5 * c, 0.2 * c, c) == doctest::Approx(0.5));
  // both above c: c / min{w}
  CHECK(mty(2.0 * c, 4.0 * c, c) == doctest::Approx(0.5));
  CHECK(mty(4.0 * c, 2.0 * c, c) == doctest::Approx(0.5));
  // straddling c
  CHECK(mty(0.1 * c, 7.0 * c, c) == doctest::Approx(1.0));
  CHECK(mty(7.0 * c, 0.1 * c, c) == doctest::Approx(1.0));
  // log-space: no overflow for ratios far outside double range
  CHECK(mty_regen_prob(-900.0, -800.0, 0.0) == 0.0);
  CHECK(mty_regen_prob(-800.0, 900.0, 0.0) == 1.0);
}

TEST_CASE("MTY rule satisfies the split identity on a 4-state independence sampler") {
  DiscreteInstance inst;
  inst.supports = {4};
  inst.pi = {0.1, 0.2, 0.3, 0.4};
  inst.proposals = {{0.4, 0.3, 0.2, 0.1}};
  inst.validate();
  std::vector<double> log_w(4), s(4), q(4);
  for (int x = 0; x < 4; ++x) log_w[x] = std::log(inst.pi[x] / inst.proposals[0][x]);
  const double log_c = std::log(1.2);
  for (int x = 0; x < 4; ++x) {
    s[x] = std::min(1.0, std::exp(log_c - log_w[x]));
    q[x] = inst.proposals[0][x] * std::min(1.0, std::exp(log_w[x] - log_c));
  }
  const RegenRule rule = [&](std::size_t a, std::size_t b) {
    return mty_regen_prob(log_w[a], log_w[b], log_c);
  };
  CHECK(exact_split_identity_check(inst, DiscreteKernel::single_block_independence, s, q, rule) <=
        1e-10);
}

TEST_CASE("component-wise rule is one when every ratio equals its constant") {
  // uniform target and proposals: alpha = 1, g_i1 = h_i1 and unit constants
  DiscreteInstance inst;
  inst.supports = {2, 2};
  inst.pi = {0.25, 0.25, 0.25, 0.25};
  inst.proposals = {{0.5, 0.5}, {0.5, 0.5}};
  inst.validate();
  const TargetDensity target = make_discrete_target(inst);
  const auto proposals = make_discrete_proposals(inst);
  MinorizationSpec spec;
  spec.components.resize(2);
  for (auto& c : spec.components) {
    c.q_is_proposal = true;
    c.log_g1 = [](std::span<const double>) { return std::log(0.5); };
    c.log_h1 = [](std::span<const double>) { return std::log(0.5); };
  }
  const double prev[2] = {0.0, 1.0};
  const double curr[2] = {1.0, 0.0};
  CHECK(cwis_regen_prob(prev, curr, spec, target, proposals) == doctest::Approx(1.0));
}

TEST_CASE("an invalid minorization raises an error") {
  const DiscreteInstance inst = testing::two_by_two_instance();
  const TargetDensity target = make_discrete_target(inst);
  const auto proposals = make_discrete_proposals(inst);
  MinorizationSpec spec;
  spec.components.resize(2);
  for (auto& c : spec.components) {
    c.q_is_proposal = true;
    c.log_g1 = [](std::span<const double>) { return 5.0; };
  }
  // jump whose first-component acceptance is below one
  const double prev[2] = {1.0, 1.0};
  const double curr[2] = {0.0, 1.0};
  CHECK_THROWS_AS(cwis_regen_prob(prev, curr, spec, target, proposals), MinorizationViolation);
}

TEST_CASE("split sweep: rejection forbids regeneration, state path ignores delta") {
  ToyModel model;
  model.b_lo = 0.01;
  const TargetDensity target = make_toy_target(model);
  const auto proposals = make_toy_cwis_proposals(model);
  const MinorizationSpec spec = toy_minorization_spec(model, 0.45);
  MinorizationSpec never = spec;
  never.components[0].log_s = [](std::span<const double>) { return kNegInf; };
  never.components[0].q_is_proposal = false;
  never.components[0].log_q = [&model](std::span<const double> x) {
    return toy_log_p1(x[0], model);
  };

  ChainState split = ChainState::make(target, {10.0, 1.0});
  ChainState zero = ChainState::make(target, {10.0, 1.0});
  ChainState plain = ChainState::make(target, {10.0, 1.0});
  RandomStream r_split(9, 0), r_zero(9, 0), r_plain(9, 0);
  RandomStream g_split = r_split.lane(1), g_zero = r_zero.lane(1);
  std::size_t regenerations = 0;
  for (int k = 0; k < 20000; ++k) {
    const auto a = split_sweep(split, proposals, target, spec, r_split, g_split);
    const auto b = split_sweep(zero, proposals, target, never, r_zero, g_zero);
    composition_sweep(plain, proposals, target, r_plain);
    REQUIRE(split.x == plain.x);
    REQUIRE(zero.x == plain.x);
    if (!a.all_accepted) REQUIRE_FALSE(a.delta);
    CHECK_FALSE(b.delta);
    regenerations += a.delta;
  }
  CHECK(regenerations > 0);
}

TEST_CASE("generic and closed-form toy rule agree along a chain") {
  ToyModel model;
  model.b_lo = 0.01;
  const ToyRegenConstants k{0.45, 0.0};
  const auto trace_fast = run_toy_split_chain(model, ToySampler::cwis, k, 10.0, 1.0, 20000,
                                              RandomStream(4, 0));
  const TargetDensity target = make_toy_target(model);
  const auto proposals = make_toy_cwis_proposals(model);
  const MinorizationSpec spec = toy_minorization_spec(model, 0.45);
  ChainState state = ChainState::make(target, {10.0, 1.0});
  RandomStream rng(4, 0);
  const auto trace = run_split_chain(state, proposals, target, spec, 20000,
                                     [](std::span<const double> x) { return toy_icv(x[0], x[1]); },
                                     rng);
  CHECK(trace.g == trace_fast.g);
  CHECK(trace.delta == trace_fast.delta);
}

TEST_CASE("tour segmentation") {
  const std::vector<double> ones(6, 1.0);
  const auto tours = collect_tours(ones, flags({1, 0, 0, 1, 0, 1}));
  REQUIRE(tours.size() == 2);
  CHECK(tours[0].N == 3);
  CHECK(tours[1].N == 2);
  CHECK(tours[0].S == 3.0);

  const std::vector<double> g{4.0, 5.0, 6.0};
  const auto each = collect_tours(g, flags({1, 1, 1}));
  REQUIRE(each.size() == 2);
  CHECK(each[0].S == 4.0);
  CHECK(each[1].S == 5.0);

  CHECK(collect_tours(g, flags({0, 1, 0})).empty());
  CHECK_THROWS_AS(collect_tours(g, flags({0, 0, 0})), InsufficientRegenerations);
}

TEST_CASE("kept tour lengths telescope to the last regeneration time") {
  RandomStream rng(8, 0);
  std::vector<double> g(1000);
  std::vector<std::uint8_t> d(1000);
  std::size_t first = 0, last = 0;
  bool seen = false;
  for (std::size_t t = 0; t < g.size(); ++t) {
    g[t] = rng.normal();
    d[t] = rng.uniform() < 0.1;
    if (d[t]) {
      if (!seen) first = t;
      seen = true;
      last = t;
    }
  }
  std::size_t total = 0;
  for (const auto& t : collect_tours(g, d)) total += t.N;
  CHECK(total == last - first);
}

TEST_CASE("regenerative estimators") {
  CHECK(rs_point_estimate(std::vector<Tour>{{3, 6.0}}) == 2.0);
  CHECK(rs_point_estimate(std::vector<Tour>{{2, 10.0}, {3, 0.0}}) == 2.0);
  CHECK_THROWS_AS(rs_point_estimate(std::vector<Tour>{}), InsufficientRegenerations);

  CHECK(rs_variance(std::vector<Tour>{{2, 4.0}, {3, 6.0}}) == 0.0);
  CHECK(rs_variance(std::vector<Tour>{{1, 0.0}, {1, 2.0}}) == doctest::Approx(1.0));
  CHECK(rs_variance(std::vector<Tour>{{4, 1.0}}) == 0.0);

  const auto single = rs_confidence_interval(std::vector<Tour>{{4, 1.0}});
  CHECK(single.degenerate_variance);
  CHECK(single.half_width == 0.0);

  CHECK(kZ975 == 1.959964);
  CHECK(normal_critical_value(0.95) == kZ975);
  CHECK(normal_critical_value(0.90) == doctest::Approx(1.6448536269514722));
}

TEST_CASE("half-width for R = 100 and xi2 = 4") {
  // 50 tours with S - N g = +2, 50 with -2, N = 1: xi2 = 4
  std::vector<Tour> tours;
  for (int r = 0; r < 100; ++r) tours.push_back({1, r % 2 == 0 ? 2.0 : -2.0});
  const auto est = rs_confidence_interval(tours);
  CHECK(est.R == 100);
  CHECK(est.xi2_hat == doctest::Approx(4.0));
  CHECK(est.half_width == doctest::Approx(0.3919928));
  CHECK(est.mean_tour_length == 1.0);
}

TEST_CASE("regeneration every step gives the sample variance") {
  RandomStream rng(21, 0);
  std::vector<Tour> tours;
  double m = 0.0, m2 = 0.0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    const double v = 3.0 + 2.0 * rng.normal();
    tours.push_back({1, v});
    m += v;
    m2 += v * v;
  }
  const double var = m2 / n - (m / n) * (m / n);
  CHECK(std::abs(rs_variance(tours) / var - 1.0) < 0.05);
}

TEST_CASE("split trace bookkeeping") {
  SplitTrace t;
  t.push(1.0, true, true);
  t.push(2.0, false, false);
  t.push(3.0, true, true);
  CHECK(t.size() == 3);
  CHECK(t.regenerations() == 2);
  const auto tours = collect_tours(t);
  REQUIRE(tours.size() == 1);
  CHECK(tours[0].S == 3.0);
}
