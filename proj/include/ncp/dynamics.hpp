#ifndef NCP_DYNAMICS_HPP
#define NCP_DYNAMICS_HPP

#include <functional>
#include <string>
#include <vector>

#include "ncp/core.hpp"
#include "ncp/geometry.hpp"

namespace ncp {

using VectorField = std::function<Vector(const State&, const Input&)>;

/// Control-affine or general system x' = f(x, u) with a box of admissible
/// inputs and an equilibrium pair f(x*, u*) = 0.
struct SystemModel {
  std::string id;
  int dim = 0;
  int input_dim = 0;
  VectorField vector_field;
  Input input_lower;
  Input input_upper;
  State equilibrium_state;
  Input equilibrium_input;
  std::vector<int> angular_dims;

  Vector operator()(const State& x, const Input& u) const {
    return vector_field(x, u);
  }
  bool admissible(const Input& u, double tol = 0.0) const;
  Input clip(const Input& u) const;
  /// Wraps angular coordinates to (-pi, pi].
  void wrap(State& x) const;
};

/// Throws InvalidInput when the model violates its structural invariants.
void validate(const SystemModel& model, const Norm& norm);

/// Piecewise-constant input on (0, dt * steps]; column k is held on
/// (k dt, (k+1) dt].
struct ControlSignal {
  double dt = 0.01;
  Eigen::MatrixXd values;

  int steps() const { return static_cast<int>(values.cols()); }
  double duration() const { return dt * steps(); }
  Input at(int step) const { return values.col(step); }
  /// Restriction to (0, steps * dt].
  ControlSignal prefix(int steps) const;
};

/// Number of integrator steps in `duration`, which must be a multiple of dt.
int steps_for(double duration, double dt);

struct Segment {
  int index = 0;
  double start = 0.0;
  double duration = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  std::vector<Segment> segments;
  /// Assignment index of the segment that produced each sample; the first
  /// sample carries the index of the first segment.
  std::vector<int> active;
};

/// One classical Runge-Kutta step with angular wrapping.
State rk4_step(const SystemModel& model, const State& x, const Input& u,
               double dt);

/// Integrates `signal` from x0 with fixed step signal.dt. Calls
/// visit(step, state) for step = 0..steps (state after `step` steps); a
/// false return stops early. Throws IntegrationDiverged on non-finite states.
void propagate(const SystemModel& model, const State& x0,
               const ControlSignal& signal,
               const std::function<bool(int, const State&)>& visit,
               double time_offset = 0.0);

/// State after the first `steps` steps of the signal.
State final_state(const SystemModel& model, const State& x0,
                  const ControlSignal& signal, int steps);

Trajectory integrate(const SystemModel& model, const State& x0,
                     const ControlSignal& signal);

/// Sampled reachable tube and system constants over it.
struct TubeEstimate {
  Region region;
  double lipschitz = 0.0;
  double speed_bound = 0.0;
  double inflation = 1.0;
};

struct EstimationParams {
  int boundary_samples = 512;
  int pair_samples = 20000;
  int speed_samples = 20000;
  double inflation = 1.2;
};

/// Bounding box of states visited from `region` under random constant
/// admissible inputs over [0, tau], half-widths scaled by `inflation`.
Region estimate_tube(const SystemModel& model, const Region& region,
                     double tau, double dt, int boundary_samples,
                     double inflation, Rng& rng);

double estimate_lipschitz(const SystemModel& model, const Region& tube,
                          int pair_samples, double inflation, Rng& rng);

double estimate_speed_bound(const SystemModel& model, const Region& region,
                            int samples, double inflation, Rng& rng);

/// Runs the three estimators in sequence with independent streams of `seed`.
TubeEstimate estimate_constants(const SystemModel& model, const Region& region,
                                double tau, double dt,
                                const EstimationParams& params,
                                std::uint64_t seed);

}  // namespace ncp

#endif  // NCP_DYNAMICS_HPP
