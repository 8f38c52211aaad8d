#include "ncp/dynamics.hpp"

#include <algorithm>
#include <sstream>

namespace ncp {

namespace {

constexpr double kPi = std::numbers::pi;

Input sample_input(const SystemModel& model, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const bool vertex = unit(rng) < 0.5;
  Input u(model.input_dim);
  for (int k = 0; k < model.input_dim; ++k) {
    const double lo = model.input_lower[k];
    const double hi = model.input_upper[k];
    u[k] = vertex ? (unit(rng) < 0.5 ? lo : hi) : lo + unit(rng) * (hi - lo);
  }
  return u;
}

}  // namespace

bool SystemModel::admissible(const Input& u, double tol) const {
  if (u.size() != input_dim) return false;
  return ((u - input_lower).array() >= -tol).all() &&
         ((input_upper - u).array() >= -tol).all();
}

Input SystemModel::clip(const Input& u) const {
  return u.cwiseMax(input_lower).cwiseMin(input_upper);
}

void SystemModel::wrap(State& x) const {
  for (int axis : angular_dims) x[axis] = wrap_angle(x[axis]);
}

void validate(const SystemModel& model, const Norm& norm) {
  if (model.dim <= 0 || model.dim > kMaxDim || model.input_dim <= 0 ||
      model.input_dim > kMaxDim)
    throw InvalidInput("model dimensions out of range");
  if (model.equilibrium_state.size() != model.dim ||
      model.equilibrium_input.size() != model.input_dim ||
      model.input_lower.size() != model.input_dim ||
      model.input_upper.size() != model.input_dim)
    throw InvalidInput("model vectors do not match declared dimensions");
  if (norm.dim() != model.dim)
    throw InvalidInput("norm dimension differs from state dimension");
  if (((model.input_upper - model.input_lower).array() < 0.0).any())
    throw InvalidInput("input_lower must not exceed input_upper");
  if (!model.admissible(model.equilibrium_input))
    throw InvalidInput("equilibrium input lies outside the input box");
  const double residual =
      norm(model(model.equilibrium_state, model.equilibrium_input));
  if (residual > 1e-9) {
    std::ostringstream msg;
    msg << "f(x*, u*) has norm " << residual << ", expected an equilibrium";
    throw InvalidInput(msg.str());
  }
}

ControlSignal ControlSignal::prefix(int count) const {
  ControlSignal out;
  out.dt = dt;
  out.values = values.leftCols(count);
  return out;
}

int steps_for(double duration, double dt) {
  if (!(dt > 0.0)) throw InvalidInput("integrator step must be positive");
  const long long n = std::llround(duration / dt);
  if (n < 0 || std::abs(static_cast<double>(n) * dt - duration) >
                   1e-9 * std::max(1.0, std::abs(duration))) {
    std::ostringstream msg;
    msg << "duration " << duration << " is not a multiple of dt = " << dt;
    throw InvalidInput(msg.str());
  }
  return static_cast<int>(n);
}

State rk4_step(const SystemModel& model, const State& x, const Input& u,
               double dt) {
  const Vector k1 = model(x, u);
  const Vector k2 = model(x + 0.5 * dt * k1, u);
  const Vector k3 = model(x + 0.5 * dt * k2, u);
  const Vector k4 = model(x + dt * k3, u);
  State next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  model.wrap(next);
  return next;
}

void propagate(const SystemModel& model, const State& x0,
               const ControlSignal& signal,
               const std::function<bool(int, const State&)>& visit,
               double time_offset) {
  if (!(signal.dt > 0.0)) throw InvalidInput("signal dt must be positive");
  if (!x0.allFinite()) throw InvalidInput("initial state is not finite");
  State x = x0;
  if (!visit(0, x)) return;
  for (int k = 0; k < signal.steps(); ++k) {
    x = rk4_step(model, x, signal.values.col(k), signal.dt);
    if (!x.allFinite()) {
      const double t = time_offset + (k + 1) * signal.dt;
      std::ostringstream msg;
      msg << "integration diverged at t = " << t;
      throw IntegrationDiverged(t, msg.str());
    }
    if (!visit(k + 1, x)) return;
  }
}

State final_state(const SystemModel& model, const State& x0,
                  const ControlSignal& signal, int steps) {
  State last = x0;
  propagate(model, x0, signal, [&](int step, const State& x) {
    last = x;
    return step < steps;
  });
  return last;
}

Trajectory integrate(const SystemModel& model, const State& x0,
                     const ControlSignal& signal) {
  Trajectory traj;
  traj.times.reserve(signal.steps() + 1);
  traj.states.reserve(signal.steps() + 1);
  propagate(model, x0, signal, [&](int step, const State& x) {
    traj.times.push_back(step * signal.dt);
    traj.states.push_back(x);
    return true;
  });
  return traj;
}

Region estimate_tube(const SystemModel& model, const Region& region,
                     double tau, double dt, int boundary_samples,
                     double inflation, Rng& rng) {
  if (!(tau > 0.0)) throw InvalidInput("tube horizon must be positive");
  if (boundary_samples < 2 * model.dim)
    throw InvalidInput("tube estimation needs at least 2d boundary samples");
  if (inflation < 1.0) throw InvalidInput("inflation must be at least 1");

  Vector lo = region.bounding_lower();
  Vector hi = region.bounding_upper();
  ControlSignal hold;
  hold.dt = dt;
  const int steps = steps_for(tau, dt);
  const int total = boundary_samples + boundary_samples / 2;
  for (int s = 0; s < total; ++s) {
    const State x0 = s < boundary_samples ? region.sample_boundary(rng)
                                          : region.sample_interior(rng);
    hold.values = sample_input(model, rng).replicate(1, steps);
    propagate(model, x0, hold, [&](int, const State& x) {
      lo = lo.cwiseMin(x);
      hi = hi.cwiseMax(x);
      return true;
    });
  }
  const Vector mid = 0.5 * (lo + hi);
  const Vector half = 0.5 * inflation * (hi - lo);
  Vector tube_lo = mid - half;
  Vector tube_hi = mid + half;
  for (int axis : region.norm().angular) {
    tube_lo[axis] = -kPi;
    tube_hi[axis] = kPi;
  }
  return Region::box(tube_lo, tube_hi, region.norm());
}

double estimate_lipschitz(const SystemModel& model, const Region& tube,
                          int pair_samples, double inflation, Rng& rng) {
  if (pair_samples < 100)
    throw InvalidInput("Lipschitz estimation needs at least 100 pairs");
  const Vector width = tube.bounding_upper() - tube.bounding_lower();
  if (!(width.array() > 0.0).all())
    throw InvalidRegion("Lipschitz estimation region has zero volume");
  const Norm& norm = tube.norm();
  std::normal_distribution<double> gauss;
  double best = 0.0;
  for (int s = 0; s < pair_samples; ++s) {
    const State x = tube.sample_interior(rng);
    State y;
    if (s % 2 == 0) {
      y = tube.sample_interior(rng);
    } else {
      Vector step(model.dim);
      for (int k = 0; k < model.dim; ++k)
        step[k] = 1e-4 * gauss(rng) / norm.weights[k];
      y = x + step;
      norm.wrap(y);
    }
    const double dist = norm.distance(y, x);
    if (!(dist > 0.0)) continue;
    const Input u = sample_input(model, rng);
    best = std::max(best, norm(model(y, u) - model(x, u)) / dist);
  }
  return best * inflation;
}

double estimate_speed_bound(const SystemModel& model, const Region& region,
                            int samples, double inflation, Rng& rng) {
  if (samples < 100)
    throw InvalidInput("speed bound estimation needs at least 100 samples");
  double best = 0.0;
  for (int s = 0; s < samples; ++s) {
    const State x = region.sample_interior(rng);
    best = std::max(best, region.norm()(model(x, sample_input(model, rng))));
  }
  return best * inflation;
}

TubeEstimate estimate_constants(const SystemModel& model, const Region& region,
                                double tau, double dt,
                                const EstimationParams& params,
                                std::uint64_t seed) {
  Rng tube_rng = make_rng(seed, 0x7475626521ULL);
  Rng pair_rng = make_rng(seed, 0x6c69707363ULL);
  Rng speed_rng = make_rng(seed, 0x7370656564ULL);
  TubeEstimate estimate{estimate_tube(model, region, tau, dt,
                                      params.boundary_samples,
                                      params.inflation, tube_rng),
                        0.0, 0.0, params.inflation};
  estimate.lipschitz = estimate_lipschitz(model, estimate.region,
                                          params.pair_samples,
                                          params.inflation, pair_rng);
  estimate.speed_bound = estimate_speed_bound(model, region,
                                              params.speed_samples,
                                              params.inflation, speed_rng);
  return estimate;
}

}  // namespace ncp
