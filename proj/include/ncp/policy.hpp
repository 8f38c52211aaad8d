#ifndef NCP_POLICY_HPP
#define NCP_POLICY_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ncp/control_search.hpp"
#include "ncp/dynamics.hpp"
#include "ncp/geometry.hpp"
#include "ncp/verification.hpp"

namespace ncp {

enum class CellOrigin { kDirect, kBootstrap };

/// Verified (center, radius, signal) triple with its certified duration and
/// rate. `signal` indexes the alphabet of the owning set.
struct Triple {
  State center;
  double radius = 0.0;
  int signal = 0;
  double tau = 0.0;
  double alpha = 0.0;
  double slack = 0.0;
  CellOrigin origin = CellOrigin::kDirect;
  bool verified = true;
};

struct AssignmentSet {
  std::string model_id;
  Norm norm;
  Region region;
  /// Regions added by expansion, in order; disjoint from `region`.
  std::vector<Region> extensions;
  State equilibrium;
  Alphabet alphabet;
  std::vector<Triple> triples;

  int size() const { return static_cast<int>(triples.size()); }
  std::vector<Ball> balls() const;
  /// Triple for an assignment index (1-based; 0 is the default control).
  const Triple& triple(int index) const { return triples.at(index - 1); }
  /// Applied duration for an assignment index: tau_i, or tau_0 for 0.
  double applied_duration(int index) const;
};

/// Normalized nearest-neighbor rule: argmin_i |x - x_i| / r_i when the
/// minimum is at most 1 (ties go to the lowest index), else 0.
int index_map(const AssignmentSet& set, const State& x);

/// Chain execution: look up the index, apply the verified prefix of its
/// signal, repeat until `horizon` is reached.
Trajectory rollout(const SystemModel& model, const AssignmentSet& set,
                   const State& x0, double horizon);

struct StabilityConstants {
  double lambda = 0.0;
  double k_gain = 0.0;
  double c = 0.0;
  double delta = 0.0;
};

/// lambda = alpha, K = e^{alpha tau} (1 + L tau e^{L tau}),
/// c = delta = eps (1 + L tau e^{L tau}).
StabilityConstants certificate_constants(double alpha, double tau,
                                         double lipschitz, double eps);

/// Practical exponential stability certificate for the chain policy:
/// |phi(t) - x*| <= K e^{-lambda t} |x0 - x*| + c on the certified region.
struct Certificate {
  double alpha = 0.0;
  double tau = 0.0;
  double lipschitz = 0.0;
  double speed_bound = 0.0;
  double inflation = 1.0;
  double eps = 0.0;
  double delta = 0.0;
  double lambda = 0.0;
  double k_gain = 0.0;
  double c = 0.0;
  /// Horizon and Lipschitz bound that fix c. They differ from tau and
  /// lipschitz only after the certified region has been expanded.
  double core_tau = 0.0;
  double core_lipschitz = 0.0;
  bool covered = false;
  int uncovered_samples = 0;
  std::uint64_t seed = 0;
  double dt = 0.0;
  int boundary_samples = 0;
  int pair_samples = 0;
  int speed_samples = 0;
  int covering_samples = 0;
};

/// Fills lambda, K, c, delta from (alpha, tau, lipschitz, eps, core_*).
void update_constants(Certificate& certificate);

/// Constants recompute from the stored fields within `tol`.
bool consistent(const Certificate& certificate, double tol = 1e-12);

/// Support of the set and covering check at the certificate's constants.
CoveringReport check_covering(const AssignmentSet& set,
                              const Certificate& certificate,
                              int sample_count);

}  // namespace ncp

#endif  // NCP_POLICY_HPP
