#ifndef NCP_VERIFICATION_HPP
#define NCP_VERIFICATION_HPP

#include <span>
#include <vector>

#include "ncp/dynamics.hpp"
#include "ncp/geometry.hpp"

namespace ncp {

/// F tau e^{L tau}: how far a trajectory can drift from a set within tau.
double containment_margin(double speed_bound, double lipschitz, double tau);

struct CheckResult {
  bool passed = false;
  double slack = 0.0;
};

/// e^{alpha tau} (|phi(tau, x_i, v) - x*| + r e^{L tau}) <= |x_i - x*| - r.
/// slack = right side - left side.
CheckResult check_decrease(const SystemModel& model, const State& center,
                           double radius, const ControlSignal& signal,
                           double tau, double alpha, double lipschitz,
                           const Norm& norm);

/// sd(phi(tau, x_i, v), S) + r e^{L tau} <= 0; slack = -left side.
CheckResult check_feasibility(const SystemModel& model, const State& center,
                              double radius, const ControlSignal& signal,
                              double tau, double lipschitz,
                              const Region& region);

/// Inter-sample envelope between chain points. With G = 1 + L tau e^{L tau},
/// E(t) = e^{alpha (tau - t)} G and c = eps G, every grid t in (0, tau] must
/// satisfy one of
///   |phi(t, x_i, v) - x*| + r e^{L t}       <= E(t) (|x_i - x*| - r) + c
///   |phi(t, x_i, v) - x_i| + r (e^{L t} + 1) <= (E(t) - 1) (|x_i - x*| - r) + c
/// so that |phi(t, y, v) - x*| <= K e^{-alpha t} |y - x*| + c on the ball.
/// slack = min over t of the better of the two margins.
struct Envelope {
  /// Rate used in E(t); must not exceed the certified rate.
  double rate = 0.0;
  double eps = 0.0;
};

CheckResult check_excursion(const SystemModel& model, const State& center,
                            double radius, const ControlSignal& signal,
                            double tau, double lipschitz,
                            const Envelope& envelope, const Norm& norm);

enum class FailingCondition { kNone, kDecrease, kFeasibility, kExcursion };

struct VerificationOutcome {
  bool passed = false;
  double tau = 0.0;
  /// Largest rate keeping the decrease inequality at tau (bisection).
  double alpha = 0.0;
  /// min of both slacks at the requested rate.
  double slack = 0.0;
  FailingCondition failing = FailingCondition::kDecrease;
};

inline constexpr double kRateTolerance = 1e-4;

/// Scans grid times in (0, duration]; returns the largest one where both
/// inequalities hold at `alpha`, with the certified rate maximized there.
/// With an envelope the inter-sample bound (check_excursion) must also hold
/// up to that time.
VerificationOutcome best_tau(const SystemModel& model, const State& center,
                             double radius, const ControlSignal& signal,
                             double alpha, double lipschitz, const Norm& norm,
                             const Region& region,
                             const Envelope* envelope = nullptr);

/// Same checks at a single grid time (`steps` integrator steps).
VerificationOutcome certify_at(const SystemModel& model, const State& center,
                               double radius, const ControlSignal& signal,
                               int steps, double alpha, double lipschitz,
                               const Norm& norm, const Region& region,
                               const Envelope* envelope = nullptr);

struct CoveringReport {
  /// eps (1 + L tau e^{L tau}), the radius that must fit inside S.
  double delta = 0.0;
  /// Distance from x* to the boundary of S.
  double inscribed = 0.0;
  bool nesting_ok = false;
  int samples_checked = 0;
  std::vector<State> uncovered;

  bool support_ok() const { return uncovered.empty(); }
  bool passed() const { return nesting_ok && support_ok(); }
  double covered_fraction() const {
    return samples_checked == 0
               ? 1.0
               : 1.0 - static_cast<double>(uncovered.size()) / samples_checked;
  }
};

/// Ball nesting is checked analytically; support coverage of
/// cl(S minus B_eps(x*)) by deterministic low-discrepancy sampling.
CoveringReport check_covering(std::span<const Ball> balls, const Norm& norm,
                              const Region& region, const State& equilibrium,
                              double eps, double lipschitz, double tau,
                              int sample_count);

/// Index of the first ball containing x, or -1.
int find_covering_ball(std::span<const Ball> balls, const Norm& norm,
                       const State& x);

struct Anchor {
  State center;
  double radius = 0.0;
  double tau = 0.0;
};

struct BootstrapOutcome {
  bool passed = false;
  /// Anchor attaining the maximum in the rate condition, or -1.
  int binding_anchor = -1;
  /// Left side of the rate condition (<= 1 to pass).
  double ratio = 0.0;
  bool support_ok = false;
  bool feasible = true;
};

/// Admits (x_j, r_j, v_j restricted to `steps`) when its inflated endpoint
/// ball lies in the support of the intersecting anchors and
/// max_i e^{-(alpha - alpha') tau_i} e^{alpha tau_j}
///       (|x_i - x*| + r_i) / (|x_j - x*| - r_j) <= 1.
/// When `region` is given the endpoint ball must also lie in it.
BootstrapOutcome check_bootstrap(const SystemModel& model, const State& center,
                                 double radius, const ControlSignal& signal,
                                 int steps, std::span<const Anchor> anchors,
                                 double alpha, double alpha_prime,
                                 double lipschitz, const Norm& norm,
                                 const Region* region = nullptr,
                                 int support_samples = 256);

}  // namespace ncp

#endif  // NCP_VERIFICATION_HPP
