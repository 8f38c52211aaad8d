#include "ncp/policy.hpp"

#include <limits>

namespace ncp {

std::vector<Ball> AssignmentSet::balls() const {
  std::vector<Ball> out;
  out.reserve(triples.size());
  for (const Triple& t : triples) out.push_back({t.center, t.radius});
  return out;
}

double AssignmentSet::applied_duration(int index) const {
  if (index == 0) return alphabet[0].duration();
  return triple(index).tau;
}

int index_map(const AssignmentSet& set, const State& x) {
  double best = std::numeric_limits<double>::infinity();
  int best_index = 0;
  for (int i = 0; i < set.size(); ++i) {
    const Triple& t = set.triples[i];
    const double ratio = set.norm.distance(x, t.center) / t.radius;
    if (ratio < best) {
      best = ratio;
      best_index = i + 1;
    }
  }
  return best <= 1.0 ? best_index : 0;
}

Trajectory rollout(const SystemModel& model, const AssignmentSet& set,
                   const State& x0, double horizon) {
  if (!(horizon > 0.0)) throw InvalidInput("rollout horizon must be positive");
  const double dt = set.alphabet[0].dt;
  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(x0);
  long long elapsed = 0;
  State x = x0;
  while (elapsed * dt < horizon) {
    const int index = index_map(set, x);
    const ControlSignal& signal =
        index == 0 ? set.alphabet[0] : set.alphabet[set.triple(index).signal];
    const int steps =
        index == 0 ? signal.steps() : steps_for(set.triple(index).tau, signal.dt);
    traj.segments.push_back({index, elapsed * dt, steps * dt});
    if (traj.active.empty()) traj.active.push_back(index);
    const long long start = elapsed;
    try {
      propagate(
          model, x, signal,
          [&](int step, const State& state) {
            if (step == 0) return true;
            traj.times.push_back((start + step) * dt);
            traj.states.push_back(state);
            traj.active.push_back(index);
            x = state;
            return step < steps;
          },
          start * dt);
    } catch (const IntegrationDiverged& err) {
      throw IntegrationDiverged(
          err.time(), std::string(err.what()) + " in segment " +
                        std::to_string(traj.segments.size() - 1) +
                        " (assignment " + std::to_string(index) + ")");
    }
    elapsed += steps;
  }
  return traj;
}

StabilityConstants certificate_constants(double alpha, double tau,
                                         double lipschitz, double eps) {
  const double growth = 1.0 + lipschitz * tau * std::exp(lipschitz * tau);
  StabilityConstants k;
  k.lambda = alpha;
  k.k_gain = std::exp(alpha * tau) * growth;
  k.c = eps * growth;
  k.delta = k.c;
  return k;
}

void update_constants(Certificate& cert) {
  const StabilityConstants rate =
      certificate_constants(cert.alpha, cert.tau, cert.lipschitz, cert.eps);
  const StabilityConstants core = certificate_constants(
      cert.alpha, cert.core_tau, cert.core_lipschitz, cert.eps);
  cert.lambda = rate.lambda;
  cert.k_gain = rate.k_gain;
  cert.c = core.c;
  cert.delta = core.delta;
}

bool consistent(const Certificate& cert, double tol) {
  Certificate copy = cert;
  update_constants(copy);
  const auto close = [tol](double a, double b) {
    return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
  };
  return close(cert.lambda, copy.lambda) && close(cert.k_gain, copy.k_gain) &&
         close(cert.c, copy.c) && close(cert.delta, copy.delta);
}

CoveringReport check_covering(const AssignmentSet& set,
                              const Certificate& certificate,
                              int sample_count) {
  const std::vector<Ball> balls = set.balls();
  CoveringReport report = check_covering(
      balls, set.norm, set.region, set.equilibrium, certificate.eps,
      certificate.core_lipschitz, certificate.core_tau, sample_count);
  for (const Region& extension : set.extensions) {
    CoveringReport part = check_covering(
        balls, set.norm, extension, set.equilibrium, certificate.eps,
        certificate.core_lipschitz, certificate.core_tau, sample_count);
    report.samples_checked += part.samples_checked;
    report.uncovered.insert(report.uncovered.end(), part.uncovered.begin(),
                            part.uncovered.end());
  }
  return report;
}

}  // namespace ncp
