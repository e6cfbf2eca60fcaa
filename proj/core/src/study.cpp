#include "vamh/study.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "vamh/errors.hpp"
#include "vamh/regen.hpp"

namespace vamh {

std::size_t StudyConfig::effective_replications() const {
  if (replications > 0) return replications;
  return model == StudyModel::toy ? 2000 : 200;
}

void StudyConfig::validate() const {
  if (n.has_value() == R.has_value()) {
    throw ConfigError("study needs exactly one of n (fixed length) and R (fixed regenerations)");
  }
  if ((n && *n == 0) || (R && *R == 0)) throw ConfigError("n and R must be positive");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("level must lie in (0, 1)");
  if (workers == 0) throw ConfigError("workers must be at least 1");
  if (budget == 0 || reference_steps == 0 || preliminary_steps < 2) {
    throw ConfigError("budget, reference_steps and preliminary_steps must be positive");
  }
  if (model == StudyModel::toy && sampler != "mhis" && sampler != "cwis") {
    throw ConfigError("toy studies support the mhis and cwis samplers");
  }
  if (model == StudyModel::glmm && sampler != "cwis") {
    throw ConfigError("GLMM studies support the cwis sampler only");
  }
}

StudyConfig parse_study_config(std::string_view json_text) {
  StudyConfig c;
  try {
    const auto j = nlohmann::json::parse(json_text);
    const auto model = j.value("model", std::string("toy"));
    if (model == "toy") {
      c.model = StudyModel::toy;
    } else if (model == "glmm") {
      c.model = StudyModel::glmm;
    } else {
      throw ConfigError("unknown model '" + model + "'");
    }
    if (j.contains("model_config")) c.model_json = j["model_config"].dump();
    c.sampler = j.value("sampler", c.sampler);
    if (j.contains("n")) c.n = j["n"].get<std::size_t>();
    if (j.contains("R")) c.R = j["R"].get<std::size_t>();
    c.replications = j.value("replications", c.replications);
    c.level = j.value("level", c.level);
    c.seed = j.value("seed", c.seed);
    c.workers = j.value("workers", c.workers);
    c.preliminary_steps = j.value("preliminary_steps", c.preliminary_steps);
    c.budget = j.value("budget", c.budget);
    c.reference_steps = j.value("reference_steps", c.reference_steps);
    if (j.contains("truth")) c.truth = j["truth"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("study config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

// Streams (g, delta) rows into complete tours.
class TourAccumulator {
 public:
  void push(double g, bool delta) {
    ++steps_;
    if (delta) {
      if (open_) tours_.push_back(current_);
      open_ = true;
      ++regenerations_;
      current_ = Tour{};
    }
    if (open_) {
      ++current_.N;
      current_.S += g;
    }
  }
  const std::vector<Tour>& tours() const { return tours_; }
  std::size_t regenerations() const { return regenerations_; }
  std::size_t steps() const { return steps_; }

 private:
  std::vector<Tour> tours_;
  Tour current_;
  bool open_ = false;
  std::size_t regenerations_ = 0;
  std::size_t steps_ = 0;
};

template <class Chain>
StudyRecord run_replication(Chain& chain, const StudyConfig& cfg, double truth,
                            std::size_t id) {
  TourAccumulator acc;
  StudyRecord rec;
  rec.replication = id;
  if (cfg.n) {
    for (std::size_t k = 0; k < *cfg.n; ++k) {
      const auto s = chain.advance();
      acc.push(s.g, s.delta);
    }
  } else {
    while (acc.regenerations() < *cfg.R + 1) {
      if (acc.steps() >= cfg.budget) {
        rec.status = RecordStatus::budget_exceeded;
        break;
      }
      const auto s = chain.advance();
      acc.push(s.g, s.delta);
    }
  }
  rec.chain_length = acc.steps();
  rec.tours = acc.tours().size();
  if (rec.status == RecordStatus::ok && rec.tours < 2) {
    rec.status = RecordStatus::too_few_tours;
  }
  if (rec.tours > 0) {
    const auto est = rs_confidence_interval(acc.tours(), cfg.level);
    rec.estimate = est.g_bar;
    rec.half_width = est.half_width;
    rec.mean_tour_length = est.mean_tour_length;
    rec.covered = std::abs(est.g_bar - truth) <= est.half_width;
  }
  return rec;
}

MeanSd mean_sd(const std::vector<double>& v) {
  MeanSd out;
  if (v.empty()) return out;
  double s = 0.0;
  for (double x : v) s += x;
  out.mean = s / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return out;
}

template <class Work>
void parallel_for(std::size_t count, std::size_t workers, Work work) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    while (true) {
      const std::size_t j = next.fetch_add(1);
      if (j >= count) return;
      try {
        work(j);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  const std::size_t n_threads = std::min(workers, count);
  if (n_threads <= 1) {
    body();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(body);
    for (auto& t : threads) t.join();
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace

StudySummary summarize(const std::vector<StudyRecord>& records) {
  StudySummary s;
  std::vector<double> hw, tours, length;
  std::size_t covered = 0;
  double tour_steps = 0.0;
  for (const auto& r : records) {
    if (r.status == RecordStatus::too_few_tours) {
      ++s.too_few_tours;
      continue;
    }
    if (r.status == RecordStatus::budget_exceeded) {
      ++s.budget_exceeded;
      continue;
    }
    ++s.included;
    hw.push_back(r.half_width);
    tours.push_back(static_cast<double>(r.tours));
    length.push_back(static_cast<double>(r.chain_length));
    covered += r.covered;
    tour_steps += r.mean_tour_length * static_cast<double>(r.tours);
  }
  s.half_width = mean_sd(hw);
  s.tours = mean_sd(tours);
  s.chain_length = mean_sd(length);
  if (s.included > 0) {
    const double n = static_cast<double>(s.included);
    s.coverage = static_cast<double>(covered) / n;
    s.coverage_se = std::sqrt(s.coverage * (1.0 - s.coverage) / n);
    s.mean_tour_length = tour_steps / (s.tours.mean * n);
  }
  return s;
}

GlmmReference glmm_reference_value(const GlmmModel& model,
                                   const GlmmPreliminary& prelim,
                                   std::size_t steps, RandomStream rng) {
  RandomStream init = rng.lane(3);
  GlmmChain chain(model, GlmmSampler::cwis, glmm_initial_state(model, init), rng,
                  0.0, prelim.log_c);
  TourAccumulator acc;
  for (std::size_t k = 0; k < steps; ++k) {
    const auto s = chain.advance();
    acc.push(s.g, s.delta);
  }
  if (acc.tours().size() < 2) {
    throw InsufficientRegenerations("reference run produced fewer than two tours");
  }
  GlmmReference ref;
  ref.estimate = rs_point_estimate(acc.tours());
  ref.mcse = std::sqrt(rs_variance(acc.tours()) / static_cast<double>(acc.tours().size()));
  ref.tours = acc.tours().size();
  ref.steps = steps;
  return ref;
}

StudyResult run_study(const StudyConfig& config) {
  config.validate();
  StudyResult result;
  const std::size_t reps = config.effective_replications();
  result.records.resize(reps);

  if (config.model == StudyModel::toy) {
    const ToyConfig toy = parse_toy_config(config.model_json);
    RandomStream prelim_rng(config.seed, kPreliminaryStream);
    const ToyRegenConstants k =
        toy_regen_constants(toy, config.preliminary_steps, prelim_rng);
    const ToySampler kind = config.sampler == "mhis" ? ToySampler::mhis : ToySampler::cwis;
    if (config.truth) {
      result.truth = *config.truth;
      result.truth_source = "config";
    } else {
      result.truth = oracle_posterior_mean_icv(toy.model);
      result.truth_source = "quadrature";
    }
    parallel_for(reps, config.workers, [&](std::size_t j) {
      ToyChain chain(toy.model, kind, k, toy.mu0, toy.theta0,
                     RandomStream(config.seed, j));
      result.records[j] = run_replication(chain, config, result.truth, j);
    });
  } else {
    const GlmmConfig gc = parse_glmm_config(config.model_json);
    const GlmmModel model = build_glmm_model(gc);
    const GlmmPreliminary prelim = glmm_preliminary_run(
        model, gc.preliminary_steps, RandomStream(config.seed, kPreliminaryStream));
    if (config.truth) {
      result.truth = *config.truth;
      result.truth_source = "config";
    } else {
      const auto ref = glmm_reference_value(model, prelim, config.reference_steps,
                                            RandomStream(config.seed, kReferenceStream));
      result.truth = ref.estimate;
      result.truth_mcse = ref.mcse;
      result.truth_source = "reference run";
    }
    parallel_for(reps, config.workers, [&](std::size_t j) {
      RandomStream rng(config.seed, j);
      RandomStream init = rng.lane(3);
      GlmmChain chain(model, GlmmSampler::cwis, glmm_initial_state(model, init), rng,
                      0.0, prelim.log_c);
      result.records[j] = run_replication(chain, config, result.truth, j);
    });
  }
  result.summary = summarize(result.records);
  return result;
}

FeasibilityResult run_feasibility_study(const GlmmConfig& config, std::size_t n,
                                        std::uint64_t seed) {
  if (n == 0) throw ConfigError("feasibility run needs n >= 1");
  const GlmmModel model = build_glmm_model(config);
  FeasibilityResult out;
  out.preliminary = glmm_preliminary_run(model, config.preliminary_steps,
                                         RandomStream(seed, kPreliminaryStream));
  out.tau2 = config.rw_tau2();
  out.steps = n;

  const std::size_t q = model.q();
  const auto& mult = config.b_multipliers;
  std::vector<std::vector<double>> b(mult.size(), std::vector<double>(q));
  for (std::size_t k = 0; k < mult.size(); ++k) {
    for (std::size_t i = 0; i < q; ++i) b[k][i] = mult[k] * out.preliminary.sd[i];
  }
  std::vector<std::size_t> inside(mult.size(), 0);
  std::vector<double> factor_sum(mult.size(), 0.0);
  std::vector<double> regen_sum(mult.size(), 0.0);

  RandomStream rng(seed, 0);
  RandomStream init = rng.lane(3);
  GlmmChain chain(model, GlmmSampler::rw, glmm_initial_state(model, init), rng, out.tau2);
  std::vector<double> prev(q);
  for (std::size_t step = 0; step < n; ++step) {
    std::copy(chain.u().begin(), chain.u().end(), prev.begin());
    const double log_pi_prev = chain.log_pi();
    const auto s = chain.advance();
    if (!s.all_accepted) continue;
    ++out.accepted;
    const double mty = mty_regen_prob(log_pi_prev, chain.log_pi(), out.preliminary.log_c_pi);
    for (std::size_t k = 0; k < mult.size(); ++k) {
      const double lf = glmm_rw_log_split_factor(prev, chain.u(), out.preliminary.u_tilde,
                                                 b[k], out.tau2);
      if (lf == kNegInf) continue;
      if (lf > std::log1p(kRegenTolerance)) {
        throw MinorizationViolation("random-walk split factor exceeds one");
      }
      const double f = std::exp(std::min(lf, 0.0));
      ++inside[k];
      factor_sum[k] += f;
      regen_sum[k] += f * mty;
    }
  }
  out.acceptance_rate = static_cast<double>(out.accepted) / static_cast<double>(n);
  for (std::size_t k = 0; k < mult.size(); ++k) {
    FeasibilityRow row;
    row.b_multiplier = mult[k];
    row.inside = inside[k];
    row.fraction_inside =
        out.accepted ? static_cast<double>(inside[k]) / static_cast<double>(out.accepted) : 0.0;
    row.mean_nonzero_factor =
        inside[k] ? factor_sum[k] / static_cast<double>(inside[k]) : 0.0;
    row.expected_regenerations = regen_sum[k] * 1e6 / static_cast<double>(n);
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace vamh
