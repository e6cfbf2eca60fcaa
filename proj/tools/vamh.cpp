#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vamh/acf.hpp"
#include "vamh/bounds.hpp"
#include "vamh/chain.hpp"
#include "vamh/csv.hpp"
#include "vamh/errors.hpp"
#include "vamh/glmm.hpp"
#include "vamh/regen.hpp"
#include "vamh/study.hpp"
#include "vamh/toy.hpp"

namespace {

using namespace vamh;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRegen = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  return out;
}

std::string read_config_or_default(const std::string& path) {
  return path.empty() ? std::string("{}") : read_file(path);
}

// ---------------------------------------------------------------- sample

struct SampleOptions {
  std::string model = "toy";
  std::string sampler = "cwis";
  std::size_t n = 10000;
  std::uint64_t seed = 1;
  std::string config;
  std::string out;
  std::string split_out;
  std::string tours_out;
  std::vector<double> weights;
  std::size_t preliminary = 10000;
};

std::string describe(const SampleOptions& o, const std::string& model_json) {
  std::ostringstream s;
  s << "command=sample model=" << o.model << " sampler=" << o.sampler << " n=" << o.n
    << " preliminary=" << o.preliminary << " model_config=" << model_json;
  if (!o.weights.empty()) {
    s << " weights=";
    for (std::size_t i = 0; i < o.weights.size(); ++i) {
      s << (i ? "," : "") << format_double(o.weights[i]);
    }
  }
  return s.str();
}

Kernel build_kernel(const std::string& sampler, std::vector<ComponentProposal> cwis,
                    std::optional<ComponentProposal> block,
                    const std::vector<double>& weights) {
  Kernel k;
  if (sampler == "cwis") {
    k.kind = KernelKind::composition;
    k.proposals = std::move(cwis);
  } else if (sampler == "mix") {
    k.kind = KernelKind::mixing;
    const std::size_t d = cwis.size();
    k.weights = weights.empty() ? std::vector<double>(d, 1.0 / static_cast<double>(d))
                                : weights;
    validate_mixing_weights(k.weights, d);
    k.proposals = std::move(cwis);
  } else {
    k.kind = KernelKind::single_block;
    k.proposals.push_back(std::move(*block));
  }
  return k;
}

void print_regen_summary(const SplitTrace& trace, const std::vector<Tour>& tours) {
  const auto est = rs_confidence_interval(tours);
  std::cout << "regenerations " << trace.regenerations() << " tours " << tours.size()
            << " mean_tour_length " << format_double(est.mean_tour_length) << '\n'
            << "estimate " << format_double(est.g_bar) << " half_width "
            << format_double(est.half_width) << '\n';
}

void write_regen_outputs(const SampleOptions& o, const std::string& header,
                         const SplitTrace& trace) {
  if (!o.split_out.empty()) {
    auto out = open_out(o.split_out);
    write_comment_header(out, header, o.seed);
    write_split_csv(out, trace);
  }
  const auto tours = collect_tours(trace);
  if (!o.tours_out.empty()) {
    auto out = open_out(o.tours_out);
    write_comment_header(out, header, o.seed);
    write_tour_csv(out, tours);
  }
  if (tours.size() < 2) {
    throw InsufficientRegenerations("the split chain completed " +
                                    std::to_string(tours.size()) + " tours; two are needed");
  }
  print_regen_summary(trace, tours);
}

int run_sample(const SampleOptions& o) {
  const std::string model_json = read_config_or_default(o.config);
  const std::string header = describe(o, model_json);
  const bool want_regen = !o.split_out.empty() || !o.tours_out.empty();
  RandomStream rng(o.seed, 0);
  ChainRun run;

  if (o.model == "toy") {
    const ToyConfig tc = parse_toy_config(model_json);
    if (o.sampler == "rw") throw ConfigError("the toy model has no random-walk sampler");
    const bool joint = o.sampler == "mhis";
    const TargetDensity target =
        joint ? make_toy_joint_target(tc.model) : make_toy_target(tc.model);
    std::optional<ComponentProposal> block;
    if (joint) block = make_toy_mhis_proposal(tc.model);
    const Kernel kernel =
        build_kernel(o.sampler, make_toy_cwis_proposals(tc.model), block, o.weights);
    ChainState state = ChainState::make(target, {tc.mu0, tc.theta0});
    run = run_chain(state, kernel, target, o.n,
                    [](std::span<const double> x) { return toy_icv(x[0], x[1]); }, rng);
    if (want_regen) {
      if (o.sampler == "mix") throw ConfigError("regeneration needs the mhis or cwis sampler");
      RandomStream prelim_rng(o.seed, kPreliminaryStream);
      const auto k = toy_regen_constants(tc, o.preliminary, prelim_rng);
      const auto kind = joint ? ToySampler::mhis : ToySampler::cwis;
      const auto trace = run_toy_split_chain(tc.model, kind, k, tc.mu0, tc.theta0, o.n,
                                             RandomStream(o.seed, 0));
      write_regen_outputs(o, header, trace);
    }
  } else if (o.model == "glmm") {
    const GlmmConfig gc = parse_glmm_config(model_json);
    const GlmmModel model = build_glmm_model(gc);
    const bool joint = o.sampler == "rw" || o.sampler == "mhis";
    const TargetDensity target = joint ? make_glmm_joint_target(model) : make_glmm_target(model);
    std::optional<ComponentProposal> block;
    if (o.sampler == "rw") block = make_glmm_rw_proposal(model.q(), gc.rw_tau2());
    if (o.sampler == "mhis") block = make_glmm_mhis_proposal(model);
    const Kernel kernel =
        build_kernel(o.sampler, make_glmm_cwis_proposals(model), block, o.weights);
    RandomStream init = rng.lane(3);
    const std::vector<double> u0 = glmm_initial_state(model, init);
    ChainState state = ChainState::make(target, u0);
    run = run_chain(state, kernel, target, o.n,
                    [&model](std::span<const double> u) {
                      return glmm_complete_loglik(u, model, model.beta, model.sigma2);
                    },
                    rng);
    if (want_regen) {
      if (o.sampler != "cwis") throw ConfigError("GLMM regeneration needs the cwis sampler");
      const auto prelim = glmm_preliminary_run(model, gc.preliminary_steps,
                                               RandomStream(o.seed, kPreliminaryStream));
      GlmmChain chain(model, GlmmSampler::cwis, u0, RandomStream(o.seed, 0), 0.0,
                      prelim.log_c);
      SplitTrace trace;
      for (std::size_t k = 0; k < o.n; ++k) {
        const auto s = chain.advance();
        trace.push(s.g, s.delta, s.all_accepted);
      }
      write_regen_outputs(o, header, trace);
    }
  } else {
    throw ConfigError("unknown model '" + o.model + "'");
  }

  if (!o.out.empty()) {
    auto out = open_out(o.out);
    write_comment_header(out, header, o.seed);
    write_trace_csv(out, run);
  }
  std::cout << "ergodic_average " << format_double(run.ergodic_average) << '\n';
  for (std::size_t i = 0; i < run.acceptance_rate.size(); ++i) {
    std::cout << "acceptance_rate_" << i + 1 << ' ' << format_double(run.acceptance_rate[i])
              << '\n';
  }
  return kExitOk;
}

// ----------------------------------------------------------------- study

struct StudyOptions {
  std::string config;
  std::string out;
  std::string summary_out;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> replications;
  std::optional<std::uint64_t> seed;
};

const char* status_name(RecordStatus s) {
  switch (s) {
    case RecordStatus::ok: return "ok";
    case RecordStatus::too_few_tours: return "too_few_tours";
    case RecordStatus::budget_exceeded: return "budget_exceeded";
  }
  return "unknown";
}

int run_study_command(const StudyOptions& o) {
  const std::string text = read_file(o.config);
  StudyConfig cfg = parse_study_config(text);
  if (o.workers) cfg.workers = *o.workers;
  if (o.replications) cfg.replications = *o.replications;
  if (o.seed) cfg.seed = *o.seed;
  cfg.validate();

  std::ostringstream header;
  header << "command=study workers=" << cfg.workers
         << " replications=" << cfg.effective_replications() << " config=" << text;
  const StudyResult result = run_study(cfg);
  const StudySummary& s = result.summary;

  if (!o.out.empty()) {
    auto out = open_out(o.out);
    write_comment_header(out, header.str(), cfg.seed);
    out << "replication,estimate,half_width,covered,tours,chain_length,mean_tour_length,status\n";
    for (const auto& r : result.records) {
      out << r.replication << ',' << format_double(r.estimate) << ','
          << format_double(r.half_width) << ',' << (r.covered ? 1 : 0) << ',' << r.tours << ','
          << r.chain_length << ',' << format_double(r.mean_tour_length) << ','
          << status_name(r.status) << '\n';
    }
  }
  if (!o.summary_out.empty()) {
    auto out = open_out(o.summary_out);
    write_comment_header(out, header.str(), cfg.seed);
    out << "included,too_few_tours,budget_exceeded,half_width_mean,half_width_sd,coverage,"
           "coverage_se,tours_mean,tours_sd,chain_length_mean,chain_length_sd,"
           "mean_tour_length,truth,truth_mcse,truth_source\n";
    out << s.included << ',' << s.too_few_tours << ',' << s.budget_exceeded << ','
        << format_double(s.half_width.mean) << ',' << format_double(s.half_width.sd) << ','
        << format_double(s.coverage) << ',' << format_double(s.coverage_se) << ','
        << format_double(s.tours.mean) << ',' << format_double(s.tours.sd) << ','
        << format_double(s.chain_length.mean) << ',' << format_double(s.chain_length.sd) << ','
        << format_double(s.mean_tour_length) << ',' << format_double(result.truth) << ','
        << format_double(result.truth_mcse) << ',' << result.truth_source << '\n';
  }
  std::cout << "truth " << format_double(result.truth) << " (" << result.truth_source << ")\n"
            << "included " << s.included << " too_few_tours " << s.too_few_tours
            << " budget_exceeded " << s.budget_exceeded << '\n'
            << "half_width " << format_double(s.half_width.mean) << " sd "
            << format_double(s.half_width.sd) << '\n'
            << "coverage " << format_double(s.coverage) << " se "
            << format_double(s.coverage_se) << '\n'
            << "tours " << format_double(s.tours.mean) << " chain_length "
            << format_double(s.chain_length.mean) << " mean_tour_length "
            << format_double(s.mean_tour_length) << '\n';
  if (s.included == 0) {
    std::cerr << "no replication produced two complete tours\n";
    return kExitRegen;
  }
  return kExitOk;
}

// ----------------------------------------------------------- feasibility

struct FeasibilityOptions {
  std::string config;
  std::string out;
  std::size_t n = 1000000;
  std::uint64_t seed = 1;
};

int run_feasibility_command(const FeasibilityOptions& o) {
  const std::string text = read_config_or_default(o.config);
  const GlmmConfig gc = parse_glmm_config(text);
  const auto result = run_feasibility_study(gc, o.n, o.seed);
  std::ostringstream header;
  header << "command=feasibility n=" << o.n << " config=" << text;
  if (!o.out.empty()) {
    auto out = open_out(o.out);
    write_comment_header(out, header.str(), o.seed);
    out << "b_multiplier,inside,fraction_inside,mean_nonzero_factor,expected_regenerations\n";
    for (const auto& r : result.rows) {
      out << format_double(r.b_multiplier) << ',' << r.inside << ','
          << format_double(r.fraction_inside) << ',' << format_double(r.mean_nonzero_factor)
          << ',' << format_double(r.expected_regenerations) << '\n';
    }
  }
  std::cout << "steps " << result.steps << " accepted " << result.accepted
            << " acceptance_rate " << format_double(result.acceptance_rate) << " tau2 "
            << format_double(result.tau2) << '\n';
  for (const auto& r : result.rows) {
    std::cout << "b " << format_double(r.b_multiplier) << " fraction "
              << format_double(r.fraction_inside) << " mean_factor "
              << format_double(r.mean_nonzero_factor) << " expected_regenerations "
              << format_double(r.expected_regenerations) << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------- bounds

struct BoundsOptions {
  std::string instance;
  std::string kind = "cwis";
  std::size_t n = 50;
  std::string out;
  std::vector<double> weights;
  std::optional<std::size_t> start;
};

int run_bounds_command(const BoundsOptions& o) {
  const std::string text = read_file(o.instance);
  const DiscreteInstance inst = parse_discrete_instance(text);
  const std::size_t d = inst.components();

  Matrix kernel;
  std::size_t stride = 1;
  std::size_t raw_per_n = d;
  std::function<double(std::size_t)> bound;
  if (o.kind == "composition") {
    kernel = exact_kernel_matrix(inst, DiscreteKernel::composition);
    const auto c = composition_constants(inst);
    bound = [c](std::size_t n) { return tv_bound_composition(c.eps_i, c.C, n); };
  } else if (o.kind == "mixing") {
    std::vector<double> w = o.weights.empty()
                                ? std::vector<double>(d, 1.0 / static_cast<double>(d))
                                : o.weights;
    validate_mixing_weights(w, d);
    kernel = exact_kernel_matrix(inst, DiscreteKernel::mixing, w);
    const auto c = composition_constants(inst);
    double eps = c.C;
    for (double e : c.eps_i) eps *= e;
    stride = d;
    bound = [eps, w](std::size_t n) { return tv_bound_mixing(eps, w, n); };
  } else if (o.kind == "cwis") {
    kernel = exact_kernel_matrix(inst, DiscreteKernel::cwis);
    const double delta = independence_delta(inst);
    const double eps = cwis_cross_ratio_epsilon(inst);
    bound = [delta, eps, d](std::size_t n) { return tv_bound_cwis(delta, eps, d, n); };
  } else if (o.kind == "independence") {
    kernel = exact_kernel_matrix(inst, DiscreteKernel::single_block_independence);
    const double delta = independence_delta(inst);
    raw_per_n = 1;
    bound = [delta](std::size_t n) { return tv_bound_cwis(delta, 1.0, 1, n); };
  } else {
    throw ConfigError("unknown kind '" + o.kind + "'");
  }
  if (o.start && *o.start >= inst.states()) throw ConfigError("start state out of range");
  const auto curve = o.start ? exact_tv_curve(inst, kernel, o.n, *o.start, stride)
                             : exact_tv_curve_sup(inst, kernel, o.n, stride);

  std::ostringstream header;
  header << "command=bounds kind=" << o.kind << " n=" << o.n
         << " start=" << (o.start ? std::to_string(*o.start) : std::string("sup"))
         << " instance=" << text;
  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!o.out.empty()) {
    file = open_out(o.out);
    os = &file;
  }
  write_comment_header(*os, header.str(), 0);
  *os << "n,raw_steps,tv_exact,tv_bound\n";
  for (std::size_t k = 1; k <= curve.size(); ++k) {
    *os << k << ',' << k * raw_per_n << ',' << format_double(curve[k - 1]) << ','
        << format_double(bound(k)) << '\n';
  }
  return kExitOk;
}

// ------------------------------------------------------------------- acf

struct AcfOptions {
  std::string in;
  std::string column = "g";
  std::size_t max_lag = 100;
  std::string out;
  std::string window_out;
  std::size_t window_first = 1001;
  std::size_t window_last = 2000;
};

// Seed recorded in the input's comment header, or zero.
std::uint64_t header_seed(const std::string& text) {
  if (text.empty() || text[0] != '#') return 0;
  const std::string first = text.substr(0, text.find('\n'));
  const auto pos = first.rfind("seed=");
  if (pos == std::string::npos) return 0;
  try {
    return std::stoull(first.substr(pos + 5));
  } catch (const std::exception&) {
    return 0;
  }
}

int run_acf_command(const AcfOptions& o) {
  const std::string text = read_file(o.in);
  const std::uint64_t seed = header_seed(text);
  std::istringstream is(text);
  const std::vector<double> g = read_csv_column(is, o.column);
  std::ostringstream header;
  header << "command=acf in=" << o.in << " column=" << o.column << " max_lag=" << o.max_lag;

  std::ofstream out;
  if (!o.out.empty()) {
    out = open_out(o.out);
    write_comment_header(out, header.str(), seed);
  }
  std::vector<double> acf;
  try {
    acf = autocorrelation(g, o.max_lag);
  } catch (const DomainError& e) {
    if (out.is_open()) out << "error,message\n1," << e.what() << '\n';
    throw;
  }
  if (out.is_open()) write_acf_csv(out, acf);
  if (!o.window_out.empty()) {
    auto win = open_out(o.window_out);
    write_comment_header(win, header.str(), seed);
    write_window_csv(win, trace_window(g, o.window_first, o.window_last));
  }
  std::cout << "n " << g.size() << " integrated_autocorr_time "
            << format_double(integrated_autocorr_time(g)) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variable-at-a-time Metropolis-Hastings samplers with regenerative standard errors"};
  app.require_subcommand(1);

  SampleOptions sample;
  auto* sample_cmd = app.add_subcommand("sample", "run one chain and export its trace");
  sample_cmd->add_option("--model", sample.model, "toy | glmm")
      ->check(CLI::IsMember({"toy", "glmm"}));
  sample_cmd->add_option("--sampler", sample.sampler, "mhis | cwis | rw | mix")
      ->check(CLI::IsMember({"mhis", "cwis", "rw", "mix"}));
  sample_cmd->add_option("--n", sample.n, "number of steps");
  sample_cmd->add_option("--seed", sample.seed, "master seed");
  sample_cmd->add_option("--config", sample.config, "model config JSON file");
  sample_cmd->add_option("--out", sample.out, "trace CSV");
  sample_cmd->add_option("--split-out", sample.split_out, "split-chain CSV (step,g,delta)");
  sample_cmd->add_option("--tours-out", sample.tours_out, "tour CSV (tour,N,S)");
  sample_cmd->add_option("--weights", sample.weights, "mixing weights")->delimiter(',');
  sample_cmd->add_option("--preliminary", sample.preliminary,
                         "preliminary steps for the toy regeneration constants");

  StudyOptions study;
  auto* study_cmd = app.add_subcommand("study", "run a replicated coverage study");
  study_cmd->add_option("--config", study.config, "study config JSON file")->required();
  study_cmd->add_option("--out", study.out, "per-replication CSV");
  study_cmd->add_option("--summary-out", study.summary_out, "summary CSV");
  study_cmd->add_option("--workers", study.workers, "concurrent replications");
  study_cmd->add_option("--replications", study.replications, "replication count");
  study_cmd->add_option("--seed", study.seed, "master seed");

  FeasibilityOptions feas;
  auto* feas_cmd =
      app.add_subcommand("feasibility", "random-walk regeneration feasibility table");
  feas_cmd->add_option("--config", feas.config, "GLMM config JSON file");
  feas_cmd->add_option("--out", feas.out, "table CSV");
  feas_cmd->add_option("--n", feas.n, "random-walk steps");
  feas_cmd->add_option("--seed", feas.seed, "master seed");

  BoundsOptions bounds;
  auto* bounds_cmd =
      app.add_subcommand("bounds", "exact total-variation curve against the analytic bound");
  bounds_cmd->add_option("--instance", bounds.instance, "discrete instance JSON file")
      ->required();
  bounds_cmd->add_option("--kind", bounds.kind, "composition | mixing | cwis | independence")
      ->check(CLI::IsMember({"composition", "mixing", "cwis", "independence"}));
  bounds_cmd->add_option("--n", bounds.n, "number of sweeps");
  bounds_cmd->add_option("--out", bounds.out, "curve CSV (stdout when omitted)");
  bounds_cmd->add_option("--weights", bounds.weights, "mixing weights")->delimiter(',');
  bounds_cmd->add_option("--start", bounds.start, "start state (default: sup over states)");

  AcfOptions acf;
  auto* acf_cmd = app.add_subcommand("acf", "sample autocorrelation of a trace column");
  acf_cmd->add_option("--in", acf.in, "trace CSV")->required();
  acf_cmd->add_option("--column", acf.column, "column name");
  acf_cmd->add_option("--max-lag", acf.max_lag, "largest lag");
  acf_cmd->add_option("--out", acf.out, "lag,acf CSV");
  acf_cmd->add_option("--window-out", acf.window_out, "step,g CSV of the trace window");
  acf_cmd->add_option("--window-first", acf.window_first, "first window step (1-based)");
  acf_cmd->add_option("--window-last", acf.window_last, "last window step (inclusive)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*sample_cmd) return run_sample(sample);
    if (*study_cmd) return run_study_command(study);
    if (*feas_cmd) return run_feasibility_command(feas);
    if (*bounds_cmd) return run_bounds_command(bounds);
    if (*acf_cmd) return run_acf_command(acf);
  } catch (const InsufficientRegenerations& e) {
    std::cerr << "insufficient regenerations: " << e.what() << '\n';
    return kExitRegen;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
