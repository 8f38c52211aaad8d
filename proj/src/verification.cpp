#include "ncp/verification.hpp"

#include <algorithm>
#include <limits>

namespace ncp {

namespace {

struct StepSlacks {
  double decrease = 0.0;
  double feasibility = 0.0;
  // Terms of the decrease inequality: room = |x_i - x*| - r and
  // reach = |phi - x*| + r e^{L t}, so slack(alpha) = room - e^{alpha t} reach.
  double room = 0.0;
  double reach = 0.0;
};

StepSlacks slacks_at(const State& x, double t, const State& center,
                     double radius, double alpha, double lipschitz,
                     const Norm& norm, const State& equilibrium,
                     const Region* region) {
  StepSlacks s;
  const double inflated = radius * std::exp(lipschitz * t);
  s.room = norm.distance(center, equilibrium) - radius;
  s.reach = norm.distance(x, equilibrium) + inflated;
  s.decrease = s.room - std::exp(alpha * t) * s.reach;
  s.feasibility = region ? -(signed_distance(x, *region) + inflated)
                         : std::numeric_limits<double>::infinity();
  return s;
}

struct Sample {
  StepSlacks slacks;
  // |phi(t) - x_i|
  double displacement = 0.0;
};

// Margin of the inter-sample envelope at grid time t for a candidate
// duration tau; non-negative when either bound holds.
double excursion_margin(const Sample& s, double t, double tau, double radius,
                        double lipschitz, const Envelope& env) {
  const double growth = 1.0 + lipschitz * tau * std::exp(lipschitz * tau);
  const double envelope = std::exp(env.rate * (tau - t)) * growth;
  const double c = env.eps * growth;
  const double spread = std::exp(lipschitz * t);
  const double from_equilibrium =
      envelope * s.slacks.room + c - s.slacks.reach;
  const double from_start = (envelope - 1.0) * s.slacks.room + c -
                            (s.displacement + radius * (spread + 1.0));
  return std::max(from_equilibrium, from_start);
}

std::vector<Sample> sample_path(const SystemModel& model, const State& center,
                                double radius, const ControlSignal& signal,
                                int steps, double alpha, double lipschitz,
                                const Norm& norm, const Region* region) {
  std::vector<Sample> path;
  path.reserve(static_cast<std::size_t>(steps) + 1);
  path.push_back({});
  propagate(model, center, signal, [&](int step, const State& x) {
    if (step == 0) return true;
    Sample s;
    s.slacks = slacks_at(x, step * signal.dt, center, radius, alpha, lipschitz,
                         norm, model.equilibrium_state, region);
    s.displacement = norm.distance(x, center);
    path.push_back(s);
    return step < steps;
  });
  return path;
}

// Minimum excursion margin over steps 1..last for duration last * dt.
double excursion_slack(const std::vector<Sample>& path, int last, double dt,
                       double radius, double lipschitz, const Envelope& env) {
  const double tau = last * dt;
  double slack = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= last; ++k) {
    slack = std::min(slack,
                     excursion_margin(path[k], k * dt, tau, radius, lipschitz, env));
    if (slack < 0.0) break;
  }
  return slack;
}

double max_rate(double room, double reach, double tau, double alpha) {
  // slack(a) = room - e^{a tau} reach is decreasing in a; alpha passes.
  const auto passes = [&](double a) {
    return room - std::exp(a * tau) * reach >= 0.0;
  };
  double lo = alpha;
  double hi = std::max(2.0 * alpha, 1.0);
  while (passes(hi) && hi < 1e6) {
    lo = hi;
    hi *= 2.0;
  }
  if (passes(hi)) return hi;
  while (hi - lo > 0.25 * kRateTolerance) {
    const double mid = 0.5 * (lo + hi);
    (passes(mid) ? lo : hi) = mid;
  }
  return lo;
}

VerificationOutcome finish(const StepSlacks& s, int steps, double dt,
                           double alpha) {
  VerificationOutcome out;
  out.tau = steps * dt;
  out.slack = std::min(s.decrease, s.feasibility);
  out.passed = s.decrease >= 0.0 && s.feasibility >= 0.0;
  if (out.passed) {
    out.failing = FailingCondition::kNone;
    out.alpha = max_rate(s.room, s.reach, out.tau, alpha);
  } else {
    out.failing = s.feasibility < s.decrease ? FailingCondition::kFeasibility
                                             : FailingCondition::kDecrease;
  }
  return out;
}

}  // namespace

double containment_margin(double speed_bound, double lipschitz, double tau) {
  return speed_bound * tau * std::exp(lipschitz * tau);
}

CheckResult check_decrease(const SystemModel& model, const State& center,
                           double radius, const ControlSignal& signal,
                           double tau, double alpha, double lipschitz,
                           const Norm& norm) {
  const int steps = steps_for(tau, signal.dt);
  if (steps > signal.steps()) throw InvalidInput("tau exceeds the signal duration");
  const State end = final_state(model, center, signal, steps);
  const StepSlacks s = slacks_at(end, tau, center, radius, alpha, lipschitz,
                                 norm, model.equilibrium_state, nullptr);
  return {s.decrease >= 0.0, s.decrease};
}

CheckResult check_feasibility(const SystemModel& model, const State& center,
                              double radius, const ControlSignal& signal,
                              double tau, double lipschitz,
                              const Region& region) {
  const int steps = steps_for(tau, signal.dt);
  if (steps > signal.steps()) throw InvalidInput("tau exceeds the signal duration");
  const State end = final_state(model, center, signal, steps);
  const double slack =
      -(signed_distance(end, region) + radius * std::exp(lipschitz * tau));
  return {slack >= 0.0, slack};
}

VerificationOutcome best_tau(const SystemModel& model, const State& center,
                             double radius, const ControlSignal& signal,
                             double alpha, double lipschitz, const Norm& norm,
                             const Region& region, const Envelope* envelope) {
  const int steps = signal.steps();
  const std::vector<Sample> path = sample_path(
      model, center, radius, signal, steps, alpha, lipschitz, norm, &region);
  // Closest miss, used to report the failing condition.
  int near_miss = -1;
  bool any_feasible = false;
  bool any_decrease = false;
  bool excursion_blocked = false;
  for (int k = steps; k >= 1; --k) {
    const StepSlacks& s = path[k].slacks;
    any_feasible = any_feasible || s.feasibility >= 0.0;
    any_decrease = any_decrease || s.decrease >= 0.0;
    if (s.decrease >= 0.0 && s.feasibility >= 0.0) {
      if (envelope == nullptr ||
          excursion_slack(path, k, signal.dt, radius, lipschitz, *envelope) >= 0.0)
        return finish(s, k, signal.dt, alpha);
      excursion_blocked = true;
    }
    if (near_miss < 0 || std::min(s.decrease, s.feasibility) >
                             std::min(path[near_miss].slacks.decrease,
                                      path[near_miss].slacks.feasibility))
      near_miss = k;
  }
  VerificationOutcome out;
  if (near_miss > 0) out = finish(path[near_miss].slacks, near_miss, signal.dt, alpha);
  out.passed = false;
  out.alpha = 0.0;
  if (excursion_blocked)
    out.failing = FailingCondition::kExcursion;
  else if (!any_feasible)
    out.failing = FailingCondition::kFeasibility;
  else if (!any_decrease)
    out.failing = FailingCondition::kDecrease;
  return out;
}

VerificationOutcome certify_at(const SystemModel& model, const State& center,
                               double radius, const ControlSignal& signal,
                               int steps, double alpha, double lipschitz,
                               const Norm& norm, const Region& region,
                               const Envelope* envelope) {
  if (steps <= 0 || steps > signal.steps())
    throw InvalidInput("certification time outside the signal duration");
  const std::vector<Sample> path = sample_path(
      model, center, radius, signal, steps, alpha, lipschitz, norm, &region);
  VerificationOutcome out = finish(path[steps].slacks, steps, signal.dt, alpha);
  if (out.passed && envelope != nullptr) {
    const double slack =
        excursion_slack(path, steps, signal.dt, radius, lipschitz, *envelope);
    if (slack < 0.0) {
      out.passed = false;
      out.alpha = 0.0;
      out.slack = slack;
      out.failing = FailingCondition::kExcursion;
    }
  }
  return out;
}

CheckResult check_excursion(const SystemModel& model, const State& center,
                            double radius, const ControlSignal& signal,
                            double tau, double lipschitz,
                            const Envelope& envelope, const Norm& norm) {
  const int steps = steps_for(tau, signal.dt);
  if (steps <= 0 || steps > signal.steps())
    throw InvalidInput("tau outside the signal duration");
  const std::vector<Sample> path = sample_path(
      model, center, radius, signal, steps, 0.0, lipschitz, norm, nullptr);
  const double slack =
      excursion_slack(path, steps, signal.dt, radius, lipschitz, envelope);
  return {slack >= 0.0, slack};
}

int find_covering_ball(std::span<const Ball> balls, const Norm& norm,
                       const State& x) {
  for (std::size_t i = 0; i < balls.size(); ++i)
    if (norm.distance(x, balls[i].center) <= balls[i].radius)
      return static_cast<int>(i);
  return -1;
}

CoveringReport check_covering(std::span<const Ball> balls, const Norm& norm,
                              const Region& region, const State& equilibrium,
                              double eps, double lipschitz, double tau,
                              int sample_count) {
  CoveringReport report;
  report.delta = eps * (1.0 + lipschitz * tau * std::exp(lipschitz * tau));
  report.inscribed = -signed_distance(equilibrium, region);
  report.nesting_ok = report.delta < report.inscribed;

  const int dim = region.dim();
  const Vector lo = region.bounding_lower();
  const Vector hi = region.bounding_upper();
  // Half the points are spread over S, the rest over boxes of half-width
  // 3^k eps around x*, so the thin inner shells get their share.
  std::vector<std::pair<Vector, Vector>> boxes{{lo, hi}};
  double extent = 0.0;
  for (int k = 0; k < dim; ++k)
    extent = std::max(extent, norm.weights[k] *
                                  std::max(std::abs(hi[k] - equilibrium[k]),
                                           std::abs(lo[k] - equilibrium[k])));
  for (double half = 3.0 * eps; half / 3.0 < extent; half *= 3.0) {
    const Vector w = half / norm.weights.array();
    boxes.emplace_back(equilibrium - w, equilibrium + w);
  }
  const int shells = static_cast<int>(boxes.size()) - 1;

  LowDiscrepancySequence sequence(dim);
  int accepted = 0;
  long long draws = 0;
  const long long max_draws = 400LL * std::max(sample_count, 1);
  while (accepted < sample_count && draws < max_draws) {
    const std::size_t b =
        shells == 0 || accepted % 2 == 0 ? 0 : 1 + (accepted / 2) % shells;
    const Vector u = sequence.next();
    ++draws;
    State x = boxes[b].first.array() +
              u.array() * (boxes[b].second - boxes[b].first).array();
    norm.wrap(x);
    if (!region.contains(x) || norm.distance(x, equilibrium) < eps) continue;
    ++accepted;
    if (find_covering_ball(balls, norm, x) < 0) report.uncovered.push_back(x);
  }
  report.samples_checked = accepted;
  return report;
}

BootstrapOutcome check_bootstrap(const SystemModel& model, const State& center,
                                 double radius, const ControlSignal& signal,
                                 int steps, std::span<const Anchor> anchors,
                                 double alpha, double alpha_prime,
                                 double lipschitz, const Norm& norm,
                                 const Region* region, int support_samples) {
  if (!(alpha_prime <= alpha)) throw InvalidInput("bootstrap requires alpha' <= alpha");
  const State& x_star = model.equilibrium_state;
  const double room = norm.distance(center, x_star) - radius;
  if (!(room > 0.0))
    throw DegenerateCandidate("candidate ball reaches the equilibrium");

  BootstrapOutcome out;
  const double tau_j = steps * signal.dt;
  const State end = final_state(model, center, signal, steps);
  const Ball reach{end, radius * std::exp(lipschitz * tau_j)};
  if (region != nullptr) out.feasible = signed_distance(end, *region) + reach.radius <= 0.0;

  std::vector<Ball> support;
  std::vector<int> ids;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const Ball ball{anchors[i].center, anchors[i].radius};
    if (intersects(ball, reach, norm)) {
      support.push_back(ball);
      ids.push_back(static_cast<int>(i));
    }
  }
  if (support.empty()) return out;

  // Support check on the center, the corners of the bounding cube that lie
  // in the ball, and low-discrepancy interior points.
  const int dim = model.dim;
  const Vector half = reach.radius / norm.weights.array();
  std::vector<State> probes{end};
  for (int corner = 0; corner < (1 << dim); ++corner) {
    State x = end;
    for (int k = 0; k < dim; ++k) x[k] += ((corner >> k) & 1 ? 1.0 : -1.0) * half[k];
    probes.push_back(x);
  }
  LowDiscrepancySequence sequence(dim);
  for (int s = 0; s < support_samples; ++s)
    probes.push_back(end.array() + (2.0 * sequence.next().array() - 1.0) * half.array());
  out.support_ok = true;
  for (State& x : probes) {
    norm.wrap(x);
    if (norm.distance(x, end) > reach.radius) continue;
    if (find_covering_ball(support, norm, x) < 0) {
      out.support_ok = false;
      break;
    }
  }

  out.ratio = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < support.size(); ++i) {
    const Anchor& anchor = anchors[ids[i]];
    const double value =
        std::exp(-(alpha - alpha_prime) * anchor.tau + alpha * tau_j) *
        (norm.distance(anchor.center, x_star) + anchor.radius) / room;
    if (value > out.ratio) {
      out.ratio = value;
      out.binding_anchor = ids[i];
    }
  }
  out.passed = out.support_ok && out.feasible && out.ratio <= 1.0;
  return out;
}

}  // namespace ncp
