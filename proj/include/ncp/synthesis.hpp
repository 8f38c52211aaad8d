#ifndef NCP_SYNTHESIS_HPP
#define NCP_SYNTHESIS_HPP

#include <cstdint>
#include <vector>

#include "ncp/control_search.hpp"
#include "ncp/dynamics.hpp"
#include "ncp/geometry.hpp"
#include "ncp/policy.hpp"

namespace ncp {

enum class GridMode {
  /// Cell radius is a fixed fraction of the distance to x*.
  kRadiusFraction,
  /// Cell radius from the covering ratio of user-supplied (lambda, K).
  kCoveringRatio,
};

struct SynthesisConfig {
  double alpha = 0.01;
  double tau_max = 1.5;
  double eps = 0.01;
  int max_splits = 3;
  double dt = 0.01;
  /// Duration of the default control (equilibrium input).
  double tau0 = 0.1;

  GridMode grid_mode = GridMode::kRadiusFraction;
  double initial_fraction = 0.1;
  double lambda = 0.0;
  double k_gain = 0.0;
  /// Known Lipschitz bound; when positive it replaces the sampled estimate.
  double lipschitz = 0.0;
  /// Also require the inter-sample bound between chain points (see
  /// check_excursion); without it the envelope is not guaranteed when
  /// f(x*, u) != 0 for some admissible u.
  bool excursion_check = true;

  SearchParams search;
  EstimationParams estimation;
  int covering_samples = 10000;

  bool bootstrap = true;
  /// alpha' = fraction * alpha for bootstrapped cells.
  double bootstrap_rate_fraction = 0.5;
  /// Candidate durations tried for bootstrapping, in integrator steps.
  int bootstrap_stride = 10;

  /// Upper bound on searched cells; 0 means unbounded. Cells left over when
  /// the budget runs out are reported as failed.
  long long max_cells = 0;

  std::uint64_t seed = 0;
  int threads = 1;

  /// Throws InvalidConfig naming the offending field.
  void validate() const;
};

struct SynthesisReport {
  int initial_cells = 0;
  int verified_cells = 0;
  int failed_cells = 0;
  int bootstrapped_cells = 0;
  /// Cells dropped by the final re-check.
  int trimmed_cells = 0;
  long long searched_cells = 0;
  bool budget_exhausted = false;
  double min_alpha = 0.0;
  double mean_alpha = 0.0;
  /// Rates before refinement; equal to min/mean_alpha otherwise.
  double previous_min_alpha = 0.0;
  double previous_mean_alpha = 0.0;
  int total_signals = 0;
  std::vector<Ball> failed;
  CoveringReport covering;
  bool complete = false;
  Certificate certificate;
  /// Seconds; not part of any persisted artifact.
  double wall_time = 0.0;
};

struct SynthesisResult {
  AssignmentSet assignments;
  Certificate certificate;
  SynthesisReport report;
};

/// Grid, search, verify, split, bootstrap, trim. The result is partial when
/// report.complete is false; report.failed and report.covering list holes.
SynthesisResult synthesize(const SystemModel& model, const Region& region,
                           const SynthesisConfig& config);

/// Splits every cell once and re-verifies the children. A child keeps the
/// parent signal when that certifies a higher rate than a fresh search.
SynthesisResult refine(const SystemModel& model, const AssignmentSet& set,
                       const Certificate& certificate,
                       const SynthesisConfig& config);

/// Adds cells for `new_region`, which must not overlap the certified
/// region. Existing triples and signal indices are untouched, so rollouts
/// from the old region do not change.
SynthesisResult expand(const SystemModel& model, const AssignmentSet& set,
                       const Certificate& certificate, const Region& new_region,
                       const SynthesisConfig& config);

/// Farthest distance from `center` to a point of the region's bounding box.
double region_extent(const Region& region, const State& center);

}  // namespace ncp

#endif  // NCP_SYNTHESIS_HPP
