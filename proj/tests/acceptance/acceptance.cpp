// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include "property_suite.hpp"
#include "vamh/acf.hpp"
#include "vamh/glmm.hpp"
#include "vamh/regen.hpp"
#include "vamh/study.hpp"
#include "vamh/toy.hpp"

using namespace vamh;

namespace {

constexpr std::uint64_t kSeed = 20240601;

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

bool within_rel(double value, double target, double rel) {
  return std::abs(value - target) <= rel * std::abs(target);
}

bool within_abs(double value, double target, double tol) {
  return std::abs(value - target) <= tol;
}

struct Report {
  int failures = 0;
  void line(int k, bool pass, const std::string& detail) {
    std::printf("criterion %d %s: %s\n", k, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    failures += pass ? 0 : 1;
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Toy models: the MHIS runs on B = (0, inf), the CWIS on B = (0.01, inf).
const char* kMhisModel = R"({"B": [0, "inf"]})";
const char* kCwisModel = R"({"B": [0.01, "inf"]})";

StudyConfig toy_study(const char* model, const char* sampler, std::size_t n) {
  StudyConfig c;
  c.model = StudyModel::toy;
  c.model_json = model;
  c.sampler = sampler;
  c.n = n;
  c.replications = 2000;
  c.seed = kSeed;
  c.workers = workers();
  c.validate();
  return c;
}

void criterion1(Report& rep) {
  struct Row {
    const char* sampler;
    const char* model;
    std::size_t n;
    double coverage, half_width, tours;
  };
  const Row rows[] = {
      {"mhis", kMhisModel, 5000, 0.9495, 0.1494, 1944.47},
      {"cwis", kCwisModel, 5000, 0.9494, 0.1113, 958.01},
      {"mhis", kMhisModel, 1000, 0.9455, 0.3321, 388.03},
      {"cwis", kCwisModel, 1000, 0.9441, 0.2472, 190.88},
  };
  bool pass = true;
  std::string detail;
  for (const auto& r : rows) {
    const auto res = run_study(toy_study(r.model, r.sampler, r.n));
    const auto& s = res.summary;
    const bool ok = within_abs(s.coverage, r.coverage, 0.015) &&
                    within_rel(s.half_width.mean, r.half_width, 0.05) &&
                    within_rel(s.tours.mean, r.tours, 0.03) && s.included == 2000;
    pass = pass && ok;
    detail += fmt("[%s n=%zu coverage %.4f (%.4f) half-width %.4f (%.4f) tours %.2f (%.2f) included %zu] ",
                  r.sampler, r.n, s.coverage, r.coverage, s.half_width.mean, r.half_width,
                  s.tours.mean, r.tours, s.included);
  }
  rep.line(1, pass, detail);
}

ToyRegenConstants toy_constants(const ToyConfig& cfg) {
  RandomStream prelim(kSeed, kPreliminaryStream);
  return toy_regen_constants(cfg, 10000, prelim);
}

void criterion2(Report& rep) {
  const std::size_t n = 1000000;
  double len[2];
  const char* models[2] = {kMhisModel, kCwisModel};
  const ToySampler kinds[2] = {ToySampler::mhis, ToySampler::cwis};
  for (int k = 0; k < 2; ++k) {
    const ToyConfig cfg = parse_toy_config(models[k]);
    const auto trace = run_toy_split_chain(cfg.model, kinds[k], toy_constants(cfg), cfg.mu0,
                                           cfg.theta0, n, RandomStream(kSeed, 0));
    len[k] = rs_confidence_interval(collect_tours(trace)).mean_tour_length;
  }
  const bool pass = within_rel(len[0], 2.57, 0.05) && within_rel(len[1], 5.22, 0.05);
  rep.line(2, pass, fmt("mean tour length MHIS %.3f (2.57 +- 5%%), CWIS %.3f (5.22 +- 5%%)",
                        len[0], len[1]));
}

void criterion3(Report& rep) {
  const ToyConfig cfg = parse_toy_config(kCwisModel);
  const auto trace = run_toy_split_chain(cfg.model, ToySampler::cwis, toy_constants(cfg), cfg.mu0,
                                         cfg.theta0, 10000000, RandomStream(kSeed, 1));
  const auto est = rs_confidence_interval(collect_tours(trace));
  const double mcse = est.half_width / kZ975;
  const double truth = oracle_posterior_mean_icv(cfg.model);
  const double z = (est.g_bar - truth) / mcse;
  rep.line(3, std::abs(z) <= 3.0,
           fmt("estimate %.6f, oracle %.6f, MCSE %.2e, |z| = %.2f (<= 3), tours %zu", est.g_bar,
               truth, mcse, std::abs(z), est.R));
}

void criterion4(Report& rep) {
  StudyConfig c;
  c.model = StudyModel::glmm;
  c.sampler = "cwis";
  c.replications = 100;
  c.seed = kSeed;
  c.workers = workers();
  const std::size_t Rs[3] = {50, 25, 10};
  StudySummary s[3];
  double truth = 0.0, truth_mcse = 0.0;
  for (int k = 0; k < 3; ++k) {
    c.R = Rs[k];
    if (k > 0) c.truth = truth;
    c.validate();
    const auto res = run_study(c);
    if (k == 0) {
      truth = res.truth;
      truth_mcse = res.truth_mcse;
    }
    s[k] = res.summary;
  }
  const double r_50_25 = s[0].chain_length.mean / s[1].chain_length.mean;
  const double r_50_10 = s[0].chain_length.mean / s[2].chain_length.mean;
  const double ref_50_25 = 533668.0 / 267392.0;
  const double ref_50_10 = 533668.0 / 107316.0;
  const double tour = s[0].mean_tour_length;
  const bool coverage_ok = s[0].coverage >= 0.90 && s[0].coverage - s[2].coverage >= 0.03;
  const bool scaling_ok =
      within_rel(r_50_25, ref_50_25, 0.25) && within_rel(r_50_10, ref_50_10, 0.25);
  const bool tour_ok = std::abs(std::log10(tour) - 4.0) <= 0.5;
  const bool complete = s[0].included == 100 && s[1].included == 100 && s[2].included == 100;
  rep.line(4, coverage_ok && scaling_ok && tour_ok && complete,
           fmt("coverage R=50/25/10 %.3f/%.3f/%.3f (R=50 >= 0.90, R=50 - R=10 >= 0.03); "
               "length ratios %.3f (%.3f) and %.3f (%.3f) within 25%%; mean tour length %.0f "
               "(order 1e4); reference %.5f +- %.5f",
               s[0].coverage, s[1].coverage, s[2].coverage, r_50_25, ref_50_25, r_50_10,
               ref_50_10, tour, truth, truth_mcse));
}

void criterion5(Report& rep) {
  const GlmmConfig cfg;
  const auto res = run_feasibility_study(cfg, 1000000, kSeed);
  bool monotone = true, orders = true, few = true;
  std::string detail;
  const FeasibilityRow* two = nullptr;
  for (std::size_t k = 0; k < res.rows.size(); ++k) {
    const auto& r = res.rows[k];
    detail += fmt("[x%.1f frac %.4f factor %.3g regen %.3g] ", r.b_multiplier, r.fraction_inside,
                  r.mean_nonzero_factor, r.expected_regenerations);
    if (r.b_multiplier == 2.0) two = &r;
    few = few && r.expected_regenerations < 1.0;
    if (k == 0) continue;
    monotone = monotone && r.fraction_inside > res.rows[k - 1].fraction_inside;
    if (res.rows[k - 1].b_multiplier >= 0.5) {
      const double drop =
          std::log10(res.rows[k - 1].mean_nonzero_factor / r.mean_nonzero_factor);
      detail += fmt("(drop %.2f orders) ", drop);
      orders = orders && drop >= 2.0;
    }
  }
  const bool band = two && two->fraction_inside >= 0.45 && two->fraction_inside <= 0.75;
  detail += fmt("monotone %d, 2.0 row in [0.45, 0.75] %d, >= 2 orders per row %d, "
                "regenerations < 1 %d",
                monotone, band, orders, few);
  rep.line(5, monotone && band && orders && few, detail);
}

struct GlmmRun {
  double acceptance = 0.0;
  double iat = 0.0;
};

GlmmRun glmm_run(const GlmmModel& model, GlmmSampler kind, double tau2, std::uint64_t stream) {
  const std::size_t n = 1000000;
  RandomStream rng(kSeed, stream);
  RandomStream init = rng.lane(3);
  GlmmChain chain(model, kind, glmm_initial_state(model, init), rng, tau2);
  std::vector<double> lc(n);
  std::size_t accepted = 0;
  for (auto& v : lc) {
    const auto s = chain.advance();
    accepted += s.all_accepted;
    v = s.g;
  }
  return {double(accepted) / double(n), integrated_autocorr_time(lc)};
}

void criterion6_7(Report& rep) {
  const GlmmConfig cfg;
  const GlmmModel model = build_glmm_model(cfg);
  const GlmmRun rw = glmm_run(model, GlmmSampler::rw, cfg.rw_tau2(), 10);
  rep.line(6, rw.acceptance >= 0.30 && rw.acceptance <= 0.50,
           fmt("RW whole-vector acceptance %.4f with tau2 = %.3f (in [0.30, 0.50])",
               rw.acceptance, cfg.rw_tau2()));
  const GlmmRun cwis = glmm_run(model, GlmmSampler::cwis, 0.0, 11);
  const GlmmRun mhis = glmm_run(model, GlmmSampler::mhis, 0.0, 12);
  const bool pass = 2.0 * cwis.iat <= rw.iat && 2.0 * rw.iat <= mhis.iat;
  rep.line(7, pass,
           fmt("IAT of l_c: CWIS %.2f, RW %.2f, MHIS %.2f (each step >= factor 2)", cwis.iat,
               rw.iat, mhis.iat));
}

void criterion8(Report& rep) {
  const auto results = testing::run_property_suite();
  std::size_t failed = 0;
  std::string detail;
  for (const auto& r : results) {
    if (!r.passed) {
      ++failed;
      detail += "[" + r.name + ": " + r.detail + "] ";
    }
  }
  detail += fmt("%zu of %zu properties passed", results.size() - failed, results.size());
  rep.line(8, failed == 0, detail);
}

}  // namespace

int main() {
  Report rep;
  const auto t0 = std::chrono::steady_clock::now();
  auto guarded = [&](int k, auto&& fn) {
    try {
      fn(rep);
    } catch (const std::exception& e) {
      rep.line(k, false, std::string("error: ") + e.what());
    }
  };
  guarded(1, criterion1);
  guarded(2, criterion2);
  guarded(3, criterion3);
  guarded(4, criterion4);
  guarded(5, criterion5);
  guarded(6, criterion6_7);
  guarded(8, criterion8);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%d criteria failed, %.0f s\n", rep.failures, secs);
  return rep.failures == 0 ? 0 : 1;
}
