#include <doctest.h>

#include <cmath>

#include "vamh/chain.hpp"
#include "vamh/errors.hpp"
#include "vamh/regen.hpp"
#include "vamh/toy.hpp"

using namespace vamh;

namespace {

ToyModel bounded_b() {
  ToyModel m;
  m.b_lo = 0.01;
  return m;
}

}  // namespace

TEST_CASE("toy oracles") {
  const ToyModel model;
  CHECK(toy_log_target(10.2, 1.0, model) == doctest::Approx(-3.25).epsilon(1e-14));
  CHECK(toy_mhis_accept(10.2, 1.0, 11.0, 0.8, model) ==
        doctest::Approx(0.029965986984836195).epsilon(1e-12));
  CHECK(toy_cwis_accept_theta(1.0, 0.5, 11.0, model) ==
        doctest::Approx(0.04076220397836599).epsilon(1e-12));
  CHECK(oracle_posterior_mean_icv(model) == doctest::Approx(10.968607443079682).epsilon(1e-7));
}

TEST_CASE("target is -inf off A x B") {
  const ToyModel model = bounded_b();
  CHECK(toy_log_target(-1.0, 1.0, model) == kNegInf);
  CHECK(toy_log_target(10.0, 0.005, model) == kNegInf);
  CHECK(toy_log_target(100.0, 1.0, model) == kNegInf);
  CHECK(std::isfinite(toy_log_target(10.0, 1.0, model)));
}

TEST_CASE("ratio identities") {
  const ToyModel model;
  RandomStream rng(2, 0);
  for (int k = 0; k < 200; ++k) {
    const double mu = 5.0 + 10.0 * rng.uniform();
    const double theta = 0.05 + 5.0 * rng.uniform();
    const double lp = toy_log_target(mu, theta, model);
    CHECK(toy_log_r1(mu, theta, model) == doctest::Approx(lp - toy_log_p1(mu, model)));
    CHECK(toy_log_r2(mu, theta, model) == doctest::Approx(lp - toy_log_p2(theta, model)));
    CHECK(toy_log_w(mu, theta, model) ==
          doctest::Approx(lp - toy_log_p1(mu, model) - toy_log_p2(theta, model)));
  }
}

TEST_CASE("sandwich inequalities for the theta-tilde minorization") {
  const ToyModel model = bounded_b();
  RandomStream rng(3, 0);
  for (double tt : {0.2, 0.45, 1.0, 3.0}) {
    for (int k = 0; k < 2000; ++k) {
      const double mu = 100.0 * rng.uniform();
      const double theta = model.b_lo + 20.0 * rng.uniform();
      const double g = toy_log_g1(mu, tt, model) + toy_log_g2(theta, tt, model);
      CHECK(g <= toy_log_r1(mu, theta, model) + 1e-12);
      CHECK(toy_log_g1(mu, tt, model) <= 1e-15);
      CHECK(toy_log_r2(mu, theta, model) <= 0.0);
    }
  }
}

TEST_CASE("closed-form CWIS rule matches the generic rule") {
  const ToyModel model = bounded_b();
  const TargetDensity target = make_toy_target(model);
  const auto proposals = make_toy_cwis_proposals(model);
  RandomStream rng(4, 0);
  for (double tt : {0.3, 0.6}) {
    const MinorizationSpec spec = toy_minorization_spec(model, tt);
    for (int k = 0; k < 500; ++k) {
      const double prev[2] = {8.0 + 4.0 * rng.uniform(), 0.1 + 3.0 * rng.uniform()};
      const double curr[2] = {8.0 + 4.0 * rng.uniform(), 0.1 + 3.0 * rng.uniform()};
      const double fast = toy_cwis_regen_prob(prev[0], prev[1], curr[0], curr[1], tt, model);
      CHECK(fast >= 0.0);
      CHECK(fast <= 1.0);
      CHECK(fast == doctest::Approx(cwis_regen_prob(prev, curr, spec, target, proposals))
                        .epsilon(1e-10));
    }
  }
  CHECK_THROWS_AS(toy_minorization_spec(model, 0.001), ConfigError);
}

TEST_CASE("truncated normal and inverse gamma samplers") {
  const ToyModel model;
  RandomStream rng(5, 0);
  const int n = 200000;
  double sum = 0.0;
  for (int k = 0; k < n; ++k) sum += sample_truncated_normal(10.2, 0.806225774829855, 0.0, 100.0, rng);
  CHECK(std::abs(sum / n - 10.2) < 4.0 * 0.806225774829855 / std::sqrt(double(n)));

  for (int k = 0; k < 1000; ++k) {
    const double v = sample_truncated_normal(0.0, 1.0, 1.0, 2.0, rng);
    CHECK(v > 1.0);
    CHECK(v < 2.0);
    const double t = sample_truncated_invgamma(4.5, 3.25, 0.5, 1.0, rng);
    CHECK(t > 0.5);
    CHECK(t < 1.0);
  }
  CHECK_THROWS_AS(sample_truncated_normal(0.0, 1.0, 50.0, 51.0, rng), TruncationError);

  // IG((m-1)/2, s2/2) mean: (s2/2) / ((m-1)/2 - 1)
  const double shape = 4.5, rate = 3.25;
  const double mean = rate / (shape - 1.0);
  const double sd = mean / std::sqrt(shape - 2.0);
  double s = 0.0;
  for (int k = 0; k < n; ++k) s += toy_propose_theta(model, rng);
  CHECK(std::abs(s / n - mean) < 4.0 * sd / std::sqrt(double(n)));
}

TEST_CASE("quadrature normalizers and minorization constants") {
  // narrow A keeps delta representable
  ToyModel model = bounded_b();
  model.a_lo = 5.0;
  model.a_hi = 15.0;
  CHECK(toy_posterior_expectation(model, [](double, double) { return 1.0; }) ==
        doctest::Approx(1.0).epsilon(1e-10));
  const double delta = toy_mhis_delta(model);
  CHECK(delta > 0.0);
  CHECK(delta < 1.0);
  // normalized p >= delta * normalized pi on A x B
  const double zp = toy_log_proposal_normalizer(model);
  const double zpi = toy_log_posterior_normalizer(model);
  RandomStream rng(6, 0);
  for (int k = 0; k < 5000; ++k) {
    const double mu = 5.0 + 10.0 * rng.uniform();
    const double theta = model.b_lo + 30.0 * rng.uniform();
    const double lp = toy_log_p1(mu, model) + toy_log_p2(theta, model) - zp;
    const double lpi = toy_log_target(mu, theta, model) - zpi;
    CHECK(lp >= std::log(delta) + lpi - 1e-9);
  }
  CHECK(toy_cwis_epsilon(model) == doctest::Approx(std::exp(-10.0 * 5.2 * 5.2 / 0.02)));
  CHECK_THROWS_AS(toy_cwis_epsilon(ToyModel{}), DomainError);
}

TEST_CASE("toy config parsing") {
  const auto cfg = parse_toy_config(
      R"({"m": 12, "B": [0.01, "inf"], "theta_tilde": 0.5, "c": 2.0, "start": [9.5, 2.0]})");
  CHECK(cfg.model.m == 12.0);
  CHECK(cfg.model.b_lo == 0.01);
  CHECK(std::isinf(cfg.model.b_hi));
  CHECK(*cfg.theta_tilde == 0.5);
  CHECK(*cfg.c == 2.0);
  CHECK(cfg.mu0 == 9.5);

  const auto med = parse_toy_config(R"({"theta_tilde": "median"})");
  CHECK(med.theta_tilde_rule == ThetaTildeRule::median);
  CHECK_FALSE(med.theta_tilde);
  const auto aut = parse_toy_config(R"({"theta_tilde": "auto", "c": "auto"})");
  CHECK(aut.theta_tilde_rule == ThetaTildeRule::rate_optimal);
  CHECK_FALSE(aut.c);

  CHECK_THROWS_AS(parse_toy_config("not json"), ConfigError);
  CHECK_THROWS_AS(parse_toy_config(R"({"m": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_toy_config(R"({"A": [0, "inf"]})"), ConfigError);
  CHECK_THROWS_AS(parse_toy_config(R"({"start": [200, 1]})"), ConfigError);
  CHECK_THROWS_AS(parse_toy_config(R"({"B": [1, "inf"], "theta_tilde": 0.5, "start": [10, 2]})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_toy_config(R"({"c": "big"})"), ConfigError);
  CHECK_THROWS_AS(parse_toy_config(R"({"c": -1})"), ConfigError);
}

TEST_CASE("fixed constants pass through, estimated ones are admissible") {
  auto cfg = parse_toy_config(R"({"B": [0.01, "inf"], "theta_tilde": 0.4, "c": 3.0})");
  RandomStream rng(7, 0);
  const auto k = toy_regen_constants(cfg, 100, rng);
  CHECK(k.theta_tilde == 0.4);
  CHECK(k.log_c == doctest::Approx(std::log(3.0)));

  cfg = parse_toy_config(R"({"B": [0.01, "inf"]})");
  RandomStream r1(7, 0), r2(7, 0);
  const auto a = toy_regen_constants(cfg, 5000, r1);
  const auto b = toy_regen_constants(cfg, 5000, r2);
  CHECK(a.theta_tilde == b.theta_tilde);
  CHECK(a.log_c == b.log_c);
  CHECK(cfg.model.in_b(a.theta_tilde));
  CHECK(a.theta_tilde < cfg.model.s2);
  CHECK(std::isfinite(a.log_c));
  CHECK_THROWS_AS(toy_regen_constants(cfg, 0, r1), ConfigError);
}

TEST_CASE("fast toy chains follow the generic kernels draw for draw") {
  const ToyModel model = bounded_b();
  const ToyRegenConstants k{0.45, 0.0};
  const std::size_t n = 5000;
  const Functional icv = [](std::span<const double> x) { return toy_icv(x[0], x[1]); };

  const auto mhis = run_toy_split_chain(model, ToySampler::mhis, k, 10.0, 1.0, n, RandomStream(8, 0));
  {
    const TargetDensity target = make_toy_joint_target(model);
    Kernel kernel{KernelKind::single_block, {make_toy_mhis_proposal(model)}, {}};
    ChainState state = ChainState::make(target, {10.0, 1.0});
    RandomStream rng(8, 0);
    const auto run = run_chain(state, kernel, target, n, icv, rng);
    CHECK(run.g == mhis.g);
  }
  const auto cwis = run_toy_split_chain(model, ToySampler::cwis, k, 10.0, 1.0, n, RandomStream(8, 1));
  {
    const TargetDensity target = make_toy_target(model);
    Kernel kernel{KernelKind::composition, make_toy_cwis_proposals(model), {}};
    ChainState state = ChainState::make(target, {10.0, 1.0});
    RandomStream rng(8, 1);
    const auto run = run_chain(state, kernel, target, n, icv, rng);
    CHECK(run.g == cwis.g);
  }
  CHECK(mhis.regenerations() > 0);
  CHECK(cwis.regenerations() > 0);
  CHECK_THROWS_AS(ToyChain(model, ToySampler::cwis, k, 10.0, 0.001, RandomStream(1, 0)),
                  InvalidStateError);
}
