#include <cmath>

#include <gtest/gtest.h>

#include "ncp/control_search.hpp"
#include "ncp/models.hpp"

namespace ncp {
namespace {

State vec(std::initializer_list<double> values) {
  State v(static_cast<int>(values.size()));
  int k = 0;
  for (double x : values) v[k++] = x;
  return v;
}

SystemModel single_integrator() {
  return make_linear(Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Ones(1, 1),
                     vec({-1.0}), vec({1.0}));
}

SearchParams small_params(std::uint64_t seed) {
  SearchParams params;
  params.rollouts = 32;
  params.iterations = 6;
  params.seed = seed;
  return params;
}

TEST(Alphabet, DefaultIsEquilibriumHold) {
  const SystemModel model = make_unicycle();
  const Alphabet alphabet = Alphabet::with_default(model, 0.1, 0.01);
  ASSERT_EQ(alphabet.size(), 1);
  EXPECT_EQ(alphabet[0].steps(), 10);
  EXPECT_EQ(alphabet[0].values, constant_hold(model, model.equilibrium_input, 0.1, 0.01).values);
}

TEST(Search, EquilibriumStartIsNoWorseThanDefault) {
  const SystemModel model = make_inverted_pendulum();
  const Norm norm = Norm::max(2, {0});
  const State x_star = model.equilibrium_state;
  const SearchResult found =
      search_signal(model, x_star, x_star, 1.0, 0.01, norm, small_params(1));
  const double hold = signal_cost(model, x_star, x_star,
                                  constant_hold(model, model.equilibrium_input, 1.0, 0.01),
                                  norm, {});
  EXPECT_LE(found.cost, hold);
}

// Oracle: the best constant input on a fine grid reaches the target.
TEST(Search, SingleIntegratorReachesTarget) {
  const SystemModel model = single_integrator();
  const Norm norm = Norm::max(1);
  double oracle = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 200; ++k) {
    const double u = -1.0 + k * 0.01;
    oracle = std::min(oracle, signal_cost(model, vec({1.0}), vec({0.0}),
                                          constant_hold(model, vec({u}), 2.0, 0.01), norm, {}));
  }
  EXPECT_LE(oracle, 0.05);
  const SearchResult found =
      search_signal(model, vec({1.0}), vec({0.0}), 2.0, 0.01, norm, small_params(2));
  EXPECT_LE(found.cost, 0.05);
  EXPECT_EQ(found.signal.steps(), 200);
}

TEST(Search, HistoryIsNonIncreasingAndDeterministic) {
  const SystemModel model = make_inverted_pendulum();
  const Norm norm = Norm::max(2, {0});
  const SearchResult a = search_signal(model, vec({1.0, 2.0}), model.equilibrium_state,
                                       1.5, 0.01, norm, small_params(3));
  const SearchResult b = search_signal(model, vec({1.0, 2.0}), model.equilibrium_state,
                                       1.5, 0.01, norm, small_params(3));
  EXPECT_EQ(a.signal.values, b.signal.values);
  EXPECT_EQ(a.cost, b.cost);
  for (std::size_t k = 1; k < a.best_cost_history.size(); ++k)
    EXPECT_LE(a.best_cost_history[k], a.best_cost_history[k - 1]);
  EXPECT_TRUE((a.signal.values.array() >= model.input_lower[0]).all());
  EXPECT_TRUE((a.signal.values.array() <= model.input_upper[0]).all());
}

TEST(Search, UnicycleDecreasesAtTargetRate) {
  const SystemModel model = make_unicycle();
  const Norm norm = Norm::max(3, {2});
  SearchObjective objective;
  objective.alpha = 0.01;
  const SearchResult found = search_signal(model, vec({-1.0, 0.5, 0.0}), model.equilibrium_state,
                                           5.0, 0.01, norm, small_params(4), objective);
  EXPECT_LT(found.cost, 1.0);
}

TEST(Search, WarmStartIsKeptWhenBest) {
  const SystemModel model = single_integrator();
  const Norm norm = Norm::max(1);
  const ControlSignal bang = constant_hold(model, vec({-1.0}), 2.0, 0.01);
  SearchParams params = small_params(5);
  params.iterations = 1;
  const SearchResult found =
      search_signal(model, vec({1.0}), vec({0.0}), 2.0, 0.01, norm, params, {}, &bang);
  EXPECT_LE(found.cost, signal_cost(model, vec({1.0}), vec({0.0}), bang, norm, {}));
}

TEST(SignalCost, InfeasiblePathIsPenalized) {
  const SystemModel model = single_integrator();
  const Norm norm = Norm::max(1);
  const Region region = Region::ball(vec({0.0}), 1.5, norm);
  SearchObjective objective;
  objective.region = &region;
  const ControlSignal away = constant_hold(model, vec({1.0}), 2.0, 0.01);
  EXPECT_GT(signal_cost(model, vec({1.495}), vec({0.0}), away, norm, objective),
            signal_cost(model, vec({1.495}), vec({0.0}), away, norm, {}));
}

}  // namespace
}  // namespace ncp
