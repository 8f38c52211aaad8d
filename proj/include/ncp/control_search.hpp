#ifndef NCP_CONTROL_SEARCH_HPP
#define NCP_CONTROL_SEARCH_HPP

#include <cstdint>
#include <vector>

#include "ncp/dynamics.hpp"
#include "ncp/geometry.hpp"

namespace ncp {

/// Finite library of control signals. Index 0 is the default control, the
/// equilibrium input held for tau_0.
struct Alphabet {
  std::vector<ControlSignal> signals;

  static Alphabet with_default(const SystemModel& model, double tau0, double dt);

  int size() const { return static_cast<int>(signals.size()); }
  const ControlSignal& operator[](int index) const { return signals.at(index); }
  int add(ControlSignal signal);
};

/// Holds u for tau (a multiple of dt). Throws InvalidInput outside the box.
ControlSignal constant_hold(const SystemModel& model, const Input& u,
                            double tau, double dt);

struct SearchParams {
  int rollouts = 256;
  int iterations = 30;
  double temperature = 0.2;
  /// Per-input standard deviation; empty means 0.3 x input range.
  Vector noise_scale;
  /// Integrator steps over which each noise draw is held.
  int noise_hold = 10;
  std::uint64_t seed = 0;
};

/// Terms of the certification inequalities folded into the search score.
/// With the defaults the score is min_t e^{alpha t} |phi(t) - target|.
struct SearchObjective {
  double alpha = 0.0;
  double radius = 0.0;
  double lipschitz = 0.0;
  /// When set, times whose endpoint ball leaves this region are penalized.
  const Region* region = nullptr;
  /// When true, a running penalty for leaving the inter-sample envelope with
  /// offset envelope_eps. Evaluated with tau = t, which never understates a
  /// violation for any longer tau.
  bool envelope = false;
  double envelope_eps = 0.0;
};

struct SearchResult {
  ControlSignal signal;
  double cost = 0.0;
  /// Best cost after each iteration (non-increasing).
  std::vector<double> best_cost_history;
};

/// min over grid times t in (0, duration] of
/// e^{alpha t} (|phi(t) - target| + r e^{L t}) plus a feasibility penalty.
double signal_cost(const SystemModel& model, const State& x_start,
                   const State& target, const ControlSignal& signal,
                   const Norm& norm, const SearchObjective& objective);

/// Path-integral style sampling search over piecewise-constant signals of
/// length tau_max. Deterministic for a fixed params.seed.
SearchResult search_signal(const SystemModel& model, const State& x_start,
                           const State& target, double tau_max, double dt,
                           const Norm& norm, const SearchParams& params,
                           const SearchObjective& objective = {},
                           const ControlSignal* warm_start = nullptr);

}  // namespace ncp

#endif  // NCP_CONTROL_SEARCH_HPP
