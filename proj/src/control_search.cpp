#include "ncp/control_search.hpp"

#include <algorithm>
#include <limits>

namespace ncp {

namespace {

constexpr double kFeasibilityPenalty = 10.0;

// Fraction of each batch spent on structured probes instead of
// perturbations of the mean.
constexpr int kProbeStride = 4;

// Probe levels reach down to e^{-7}, about 1e-3, of the distance to a bound.
constexpr double kLevelSpan = -7.0;

Eigen::MatrixXd clip_columns(const SystemModel& model, Eigen::MatrixXd values) {
  for (Eigen::Index k = 0; k < values.cols(); ++k)
    values.col(k) = values.col(k)
                        .cwiseMax(model.input_lower)
                        .cwiseMin(model.input_upper);
  return values;
}

}  // namespace

Alphabet Alphabet::with_default(const SystemModel& model, double tau0,
                                double dt) {
  Alphabet alphabet;
  alphabet.signals.push_back(
      constant_hold(model, model.equilibrium_input, tau0, dt));
  return alphabet;
}

int Alphabet::add(ControlSignal signal) {
  signals.push_back(std::move(signal));
  return size() - 1;
}

ControlSignal constant_hold(const SystemModel& model, const Input& u,
                            double tau, double dt) {
  if (!model.admissible(u)) throw InvalidInput("held input lies outside the input box");
  const int steps = steps_for(tau, dt);
  ControlSignal signal;
  signal.dt = dt;
  signal.values = u.replicate(1, steps);
  return signal;
}

double signal_cost(const SystemModel& model, const State& x_start,
                   const State& target, const ControlSignal& signal,
                   const Norm& norm, const SearchObjective& objective) {
  const double rate_step = std::exp(objective.alpha * signal.dt);
  const double growth_step = std::exp(objective.lipschitz * signal.dt);
  double rate = 1.0;
  double growth = 1.0;
  double best = std::numeric_limits<double>::infinity();
  const double room = norm.distance(x_start, target) - objective.radius;
  const double lip = objective.lipschitz;
  double strayed = 0.0;
  try {
    propagate(model, x_start, signal, [&](int step, const State& x) {
      if (step == 0) return true;
      rate *= rate_step;
      growth *= growth_step;
      const double inflated = objective.radius * growth;
      const double reach = norm.distance(x, target) + inflated;
      double cost = rate * reach;
      if (objective.envelope) {
        const double t = step * signal.dt;
        const double g = 1.0 + lip * t * growth;
        const double c = objective.envelope_eps * g;
        const double over_a = reach - (g * room + c);
        const double over_b = norm.distance(x, x_start) +
                              objective.radius * (growth + 1.0) -
                              ((g - 1.0) * room + c);
        strayed = std::max(strayed, std::min(over_a, over_b));
        cost += kFeasibilityPenalty * strayed;
      }
      if (objective.region != nullptr) {
        const double excess = signed_distance(x, *objective.region) + inflated;
        if (excess > 0.0) cost += kFeasibilityPenalty * excess;
      }
      best = std::min(best, cost);
      return true;
    });
  } catch (const IntegrationDiverged&) {
    return std::numeric_limits<double>::infinity();
  }
  return best;
}

SearchResult search_signal(const SystemModel& model, const State& x_start,
                           const State& target, double tau_max, double dt,
                           const Norm& norm, const SearchParams& params,
                           const SearchObjective& objective,
                           const ControlSignal* warm_start) {
  const int steps = steps_for(tau_max, dt);
  if (steps <= 0) throw InvalidInput("search horizon must hold at least one step");
  const int m = model.input_dim;
  const int hold = std::max(1, params.noise_hold);
  const int knots = (steps + hold - 1) / hold;
  const Vector range = model.input_upper - model.input_lower;
  const Vector sigma = params.noise_scale.size() == m
                           ? params.noise_scale
                           : Vector(0.3 * range);

  Rng rng = make_rng(params.seed, 0x6d707069ULL);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Eigen::MatrixXd mean = model.equilibrium_input.replicate(1, steps);
  if (warm_start != nullptr) {
    const int n = std::min(steps, warm_start->steps());
    mean.leftCols(n) = warm_start->values.leftCols(n);
  }
  mean = clip_columns(model, std::move(mean));

  SearchResult result;
  result.signal.dt = dt;
  result.signal.values = mean;
  result.cost = signal_cost(model, x_start, target, result.signal, norm, objective);
  if (warm_start != nullptr) {
    // The equilibrium hold is always a candidate.
    ControlSignal cold;
    cold.dt = dt;
    cold.values = model.equilibrium_input.replicate(1, steps);
    const double cost = signal_cost(model, x_start, target, cold, norm, objective);
    if (cost < result.cost) {
      result.cost = cost;
      result.signal = std::move(cold);
    }
  }
  const double scale = std::max(norm.distance(x_start, target) + objective.radius,
                                1e-12);

  const int rollouts = std::max(1, params.rollouts);
  std::vector<Eigen::MatrixXd> samples(rollouts);
  std::vector<double> costs(rollouts);
  ControlSignal candidate;
  candidate.dt = dt;
  for (int iter = 0; iter < params.iterations; ++iter) {
    for (int r = 0; r < rollouts; ++r) {
      Eigen::MatrixXd& u = samples[r];
      if (r == 0) {
        u = mean;
      } else if (r % kProbeStride == 0) {
        // Saturated, uniform, or a log-uniform fraction of the way to a bound,
        // so that gentle inputs near small targets are also tried.
        const auto level = [&] {
          Input v(m);
          for (int j = 0; j < m; ++j) {
            const double s = unit(rng);
            const double bound =
                unit(rng) < 0.5 ? model.input_lower[j] : model.input_upper[j];
            const double rest = model.equilibrium_input[j];
            v[j] = s < 0.25  ? bound
                   : s < 0.5 ? model.input_lower[j] + unit(rng) * range[j]
                             : rest + std::exp(unit(rng) * kLevelSpan) * (bound - rest);
          }
          return v;
        };
        // Log-uniform switch times so short first phases are common; the
        // remainder holds the equilibrium input.
        const auto phase = [&](int limit) {
          return std::min(limit, static_cast<int>(std::ceil(
                                     std::exp(unit(rng) * std::log(limit)))));
        };
        u = clip_columns(model, level().replicate(1, steps));
        if ((r / kProbeStride) % 2 == 1) {
          const int first = phase(steps);
          const int second = first < steps ? phase(steps - first) : 0;
          const Input head = u.col(0);
          u.middleCols(first, second).colwise() =
              unit(rng) < 0.5 ? Input(2.0 * model.equilibrium_input - head)
                              : level();
          u.rightCols(steps - first - second).colwise() = model.equilibrium_input;
          u = clip_columns(model, std::move(u));
        }
      } else {
        u = mean;
        // Odd rollouts shrink the noise to search close to the mean.
        const double shrink = r % 2 == 1 ? std::exp(unit(rng) * kLevelSpan) : 1.0;
        for (int knot = 0; knot < knots; ++knot) {
          Input noise(m);
          for (int j = 0; j < m; ++j) noise[j] = shrink * sigma[j] * gauss(rng);
          const int first = knot * hold;
          const int count = std::min(hold, steps - first);
          u.middleCols(first, count).colwise() += noise;
        }
        u = clip_columns(model, std::move(u));
      }
      candidate.values = u;
      costs[r] = signal_cost(model, x_start, target, candidate, norm, objective);
      if (costs[r] < result.cost) {
        result.cost = costs[r];
        result.signal.values = u;
      }
    }

    const double best = *std::min_element(costs.begin(), costs.end());
    if (std::isfinite(best)) {
      Eigen::MatrixXd weighted = Eigen::MatrixXd::Zero(m, steps);
      double total = 0.0;
      for (int r = 0; r < rollouts; ++r) {
        if (!std::isfinite(costs[r])) continue;
        const double w = std::exp(-(costs[r] - best) / (params.temperature * scale));
        weighted += w * samples[r];
        total += w;
      }
      mean = clip_columns(model, weighted / total);
    }
    result.best_cost_history.push_back(result.cost);
  }
  return result;
}

}  // namespace ncp
