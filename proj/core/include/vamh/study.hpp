#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vamh/glmm.hpp"
#include "vamh/toy.hpp"

namespace vamh {

enum class StudyModel { toy, glmm };

struct StudyConfig {
  StudyModel model = StudyModel::toy;
  std::string model_json = "{}";
  std::string sampler = "cwis";
  std::optional<std::size_t> n;  // fixed-n design
  std::optional<std::size_t> R;  // fixed-R design
  std::size_t replications = 0;  // 0: model default (toy 2000, GLMM 200)
  double level = 0.95;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::size_t preliminary_steps = 10000;  // toy constants
  std::size_t budget = 100000000;         // fixed-R step cap per replication
  std::size_t reference_steps = 100000000;
  std::optional<double> truth;

  std::size_t effective_replications() const;
  /// Exactly one of n and R, positive counts, level in (0, 1).
  void validate() const;
};

/// Keys model ("toy" | "glmm"), model_config (object), sampler, n | R,
/// replications, level, seed, workers, preliminary_steps, budget,
/// reference_steps, truth.
StudyConfig parse_study_config(std::string_view json_text);

enum class RecordStatus { ok, too_few_tours, budget_exceeded };

struct StudyRecord {
  std::size_t replication = 0;
  double estimate = 0.0;
  double half_width = 0.0;
  bool covered = false;
  std::size_t tours = 0;
  std::size_t chain_length = 0;
  double mean_tour_length = 0.0;
  RecordStatus status = RecordStatus::ok;
};

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

struct StudySummary {
  std::size_t included = 0;
  std::size_t too_few_tours = 0;
  std::size_t budget_exceeded = 0;
  MeanSd half_width;
  double coverage = 0.0;
  double coverage_se = 0.0;
  MeanSd tours;
  MeanSd chain_length;
  /// sum of complete tour lengths over sum of tour counts.
  double mean_tour_length = 0.0;
};

struct StudyResult {
  std::vector<StudyRecord> records;  // ordered by replication
  StudySummary summary;
  double truth = 0.0;
  double truth_mcse = 0.0;  // zero for the quadrature oracle
  std::string truth_source;
};

/// Replication j runs on stream (seed, j). Preliminary and reference runs
/// use reserved stream ids at the top of the range.
StudyResult run_study(const StudyConfig& config);

StudySummary summarize(const std::vector<StudyRecord>& records);

inline constexpr std::uint64_t kPreliminaryStream = RandomStream::kMaxStreamId;
inline constexpr std::uint64_t kReferenceStream = RandomStream::kMaxStreamId - 1;

struct GlmmReference {
  double estimate = 0.0;
  double mcse = 0.0;
  std::size_t tours = 0;
  std::size_t steps = 0;
};

/// Regenerative estimate of E l_c from one long CWIS split chain.
GlmmReference glmm_reference_value(const GlmmModel& model,
                                   const GlmmPreliminary& prelim,
                                   std::size_t steps, RandomStream rng);

struct FeasibilityRow {
  double b_multiplier = 0.0;
  std::size_t inside = 0;
  double fraction_inside = 0.0;
  double mean_nonzero_factor = 0.0;
  /// Sum over accepted jumps of the full regeneration probability, scaled
  /// to 10^6 steps.
  double expected_regenerations = 0.0;
};

struct FeasibilityResult {
  std::vector<FeasibilityRow> rows;
  std::size_t steps = 0;
  std::size_t accepted = 0;
  double acceptance_rate = 0.0;
  double tau2 = 0.0;
  GlmmPreliminary preliminary;
};

/// Random-walk chain of n steps from U^(0) ~ N(0, sigma2 I); for every
/// accepted proposal and every multiplier evaluates the hypercube indicator
/// and split factor with b_i = multiplier * SD_i.
FeasibilityResult run_feasibility_study(const GlmmConfig& config, std::size_t n,
                                        std::uint64_t seed);

}  // namespace vamh
