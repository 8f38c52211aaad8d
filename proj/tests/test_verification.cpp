#include <cmath>

#include <gtest/gtest.h>

#include "ncp/control_search.hpp"
#include "ncp/geometry.hpp"
#include "ncp/models.hpp"
#include "ncp/verification.hpp"

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

SystemModel decay() {
  return make_linear(-Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Zero(1, 1),
                     vec({-1.0}), vec({1.0}));
}

// phi(t, y, v) for x' = u, exact for piecewise-constant v.
double flow(double y, const ControlSignal& v, int steps) {
  return y + v.dt * v.values.leftCols(steps).sum();
}

TEST(ContainmentMargin, ClosedForms) {
  EXPECT_EQ(containment_margin(3.0, 2.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(containment_margin(2.0, 0.0, 1.5), 3.0);
  EXPECT_NEAR(containment_margin(1.0, 1.0, 1.5), 1.5 * std::exp(1.5), 1e-12);
  EXPECT_NEAR(containment_margin(1.0, 1.0, 1.5), 6.7225336055, 1e-9);
}

TEST(CheckDecrease, SingleIntegratorAnalytic) {
  const SystemModel model = single_integrator();
  const Norm norm = Norm::max(1);
  const ControlSignal v = constant_hold(model, vec({-1.0}), 0.5, 0.01);
  const CheckResult res = check_decrease(model, vec({1.0}), 0.01, v, 0.5, 0.1, 0.0, norm);
  EXPECT_TRUE(res.passed);
  EXPECT_NEAR(res.slack, 0.99 - std::exp(0.05) * 0.51, 1e-12);
}

TEST(CheckDecrease, CenterAtEquilibriumFails) {
  const SystemModel model = single_integrator();
  const ControlSignal v = constant_hold(model, vec({0.0}), 0.5, 0.01);
  EXPECT_FALSE(check_decrease(model, vec({0.0}), 0.01, v, 0.5, 0.1, 0.0, Norm::max(1)).passed);
}

TEST(CheckFeasibility, EndpointCases) {
  const SystemModel model = single_integrator();
  const Norm norm = Norm::max(1);
  const Region region = Region::ball(vec({0.0}), 2.0, norm);
  const ControlSignal back = constant_hold(model, vec({-1.0}), 1.0, 0.01);
  const CheckResult inside = check_feasibility(model, vec({1.0}), 0.1, back, 1.0, 0.5, region);
  EXPECT_TRUE(inside.passed);
  EXPECT_NEAR(inside.slack, 2.0 - 0.1 * std::exp(0.5), 1e-12);
  const ControlSignal out = constant_hold(model, vec({1.0}), 1.0, 0.01);
  EXPECT_FALSE(check_feasibility(model, vec({1.0}), 0.01, out, 1.0, 0.0, region).passed);
  EXPECT_FALSE(check_feasibility(model, vec({1.5}), 0.01, out, 1.0, 0.0, region).passed);
}

TEST(BestTau, ExitingSignalFailsFeasibility) {
  const SystemModel model = single_integrator();
  const Norm norm = Norm::max(1);
  const Region region = Region::ball(vec({0.0}), 2.0, norm);
  const ControlSignal out = constant_hold(model, vec({1.0}), 1.0, 0.01);
  const VerificationOutcome res =
      best_tau(model, vec({1.995}), 0.001, out, 0.1, 0.0, norm, region);
  EXPECT_FALSE(res.passed);
  EXPECT_EQ(res.failing, FailingCondition::kFeasibility);
}

// Oracle: for x' = -x the largest rate at tau solves
// e^{a tau} (e^{-tau} + r e^{tau}) = 1 - r.
TEST(BestTau, DecayRateMatchesAnalytic) {
  const SystemModel model = decay();
  const Norm norm = Norm::max(1);
  const Region region = Region::ball(vec({0.0}), 2.0, norm);
  const double r = 0.01;
  const ControlSignal v = constant_hold(model, vec({0.0}), 2.0, 0.01);
  const VerificationOutcome res = best_tau(model, vec({1.0}), r, v, 0.1, 1.0, norm, region);
  ASSERT_TRUE(res.passed);
  const double tau = res.tau;
  const double analytic = std::log((1.0 - r) / (std::exp(-tau) + r * std::exp(tau))) / tau;
  EXPECT_NEAR(res.alpha, analytic, 2.0 * kRateTolerance);
  EXPECT_LE(res.alpha, analytic + 1e-9);
  EXPECT_GT(res.alpha, 0.7);
}

TEST(CertifyAt, AgreesWithDirectChecks) {
  const SystemModel model = decay();
  const Norm norm = Norm::max(1);
  const Region region = Region::ball(vec({0.0}), 2.0, norm);
  const ControlSignal v = constant_hold(model, vec({0.0}), 1.0, 0.01);
  const VerificationOutcome res = certify_at(model, vec({1.0}), 0.05, v, 50, 0.2, 1.0, norm, region);
  EXPECT_TRUE(res.passed);
  EXPECT_DOUBLE_EQ(res.tau, 0.5);
  EXPECT_TRUE(check_decrease(model, vec({1.0}), 0.05, v, 0.5, res.alpha, 1.0, norm).passed);
}

// Every passing (ball, signal, tau) satisfies the one-step decrease for
// sampled points of the ball, checked against the exact flow.
TEST(BestTau, SoundAgainstAnalyticFlow) {
  const SystemModel model = single_integrator();
  const Norm norm = Norm::max(1);
  const Region region = Region::ball(vec({0.0}), 2.0, norm);
  Rng rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int passed = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const double center = (unit(rng) < 0.5 ? -1.0 : 1.0) * (0.05 + 1.9 * unit(rng));
    const double radius = 0.3 * unit(rng) * std::abs(center);
    SearchParams params;
    params.rollouts = 16;
    params.iterations = 3;
    params.seed = static_cast<std::uint64_t>(trial);
    const SearchResult found = search_signal(model, vec({center}), vec({0.0}), 3.0, 0.01,
                                             norm, params, {0.1, radius, 0.0, &region});
    const VerificationOutcome res =
        best_tau(model, vec({center}), radius, found.signal, 0.1, 0.0, norm, region);
    if (!res.passed) continue;
    ++passed;
    const int steps = steps_for(res.tau, 0.01);
    for (int s = 0; s < 100; ++s) {
      const double y = center + radius * (2.0 * unit(rng) - 1.0);
      EXPECT_LE(std::exp(res.alpha * res.tau) * std::abs(flow(y, found.signal, steps)),
                std::abs(y) + 1e-6);
    }
  }
  EXPECT_GT(passed, 100);
}

// With the envelope check on, every point of a passing ball stays under
// K e^{-rate t} |y| + c between chain points, even though f(0, u) != 0.
TEST(Excursion, EnvelopeHoldsBetweenChainPoints) {
  const SystemModel model = single_integrator();
  const Norm norm = Norm::max(1);
  const Region region = Region::ball(vec({0.0}), 2.0, norm);
  const Envelope envelope{0.05, 0.01};
  Rng rng(12);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int passed = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const double center = 0.02 + 1.9 * unit(rng);
    const double radius = 0.3 * unit(rng) * center;
    ControlSignal v;
    v.dt = 0.01;
    v.values = Eigen::MatrixXd::Random(1, 300);
    v.values.leftCols(static_cast<int>(100 * unit(rng))).setConstant(-1.0);
    const VerificationOutcome res =
        best_tau(model, vec({center}), radius, v, 0.1, 0.0, norm, region, &envelope);
    if (!res.passed) continue;
    ++passed;
    const int steps = steps_for(res.tau, 0.01);
    const double k = std::exp(envelope.rate * res.tau);
    for (int s = 0; s < 50; ++s) {
      const double y = center + radius * (2.0 * unit(rng) - 1.0);
      for (int t = 1; t <= steps; ++t)
        EXPECT_LE(std::abs(flow(y, v, t)),
                  k * std::exp(-envelope.rate * t * 0.01) * std::abs(y) + envelope.eps + 1e-9);
    }
  }
  EXPECT_GT(passed, 20);
}

TEST(Excursion, WanderingSignalIsRejected) {
  const SystemModel model = single_integrator();
  const Norm norm = Norm::max(1);
  // Out to 0.6 and back to the origin: decrease holds at t = 1, but the
  // path leaves K |x| + c on the way.
  ControlSignal v;
  v.dt = 0.01;
  v.values.resize(1, 100);
  v.values.leftCols(25).setConstant(1.0);
  v.values.rightCols(75).setConstant(-0.6);
  const CheckResult res =
      check_excursion(model, vec({0.35}), 0.001, v, 1.0, 0.0, {0.05, 0.01}, norm);
  EXPECT_FALSE(res.passed);
  EXPECT_LT(res.slack, 0.0);
}

TEST(Covering, NestingAndSupport) {
  const Norm norm = Norm::max(1);
  const Region region = Region::ball(vec({0.0}), 1.0, norm);
  const std::vector<Ball> one{{vec({0.0}), 1.0}};
  const CoveringReport ok =
      check_covering(one, norm, region, vec({0.0}), 0.01, 1.0, 1.0, 1000);
  EXPECT_TRUE(ok.passed());
  EXPECT_NEAR(ok.delta, 0.01 * (1.0 + std::exp(1.0)), 1e-15);
  const CoveringReport nest =
      check_covering(one, norm, region, vec({0.0}), 0.4, 1.0, 1.0, 1000);
  EXPECT_FALSE(nest.nesting_ok);
  const std::vector<Ball> half{{vec({0.5}), 0.5}};
  const CoveringReport hole =
      check_covering(half, norm, region, vec({0.0}), 0.01, 0.0, 1.0, 1000);
  EXPECT_FALSE(hole.support_ok());
  EXPECT_NEAR(hole.covered_fraction(), 0.5, 0.02);
}

TEST(Covering, AnnulusGridCoversBox) {
  const Norm norm = Norm::max(2);
  const Region region = Region::box(vec({-1.0, -1.0}), vec({1.0, 1.0}), norm);
  const std::vector<Ball> grid = build_annulus_grid(1.0, 0.05, 0.3, norm, State::Zero(2));
  const CoveringReport rep =
      check_covering(grid, norm, region, State::Zero(2), 0.05, 0.0, 1.0, 10000);
  EXPECT_TRUE(rep.passed());
  EXPECT_EQ(rep.samples_checked, 10000);
}

class Bootstrap : public ::testing::Test {
 protected:
  SystemModel model = single_integrator();
  Norm norm = Norm::max(1);
  ControlSignal back = constant_hold(model, vec({-1.0}), 0.5, 0.01);
};

TEST_F(Bootstrap, CloserAnchorAdmits) {
  const std::vector<Anchor> anchors{{vec({0.5}), 0.2, 1.0}};
  const BootstrapOutcome out = check_bootstrap(model, vec({1.0}), 0.05, back, 50, anchors,
                                               0.1, 0.1, 0.0, norm);
  EXPECT_TRUE(out.passed);
  EXPECT_EQ(out.binding_anchor, 0);
  EXPECT_NEAR(out.ratio, std::exp(0.1 * 0.5) * 0.7 / 0.95, 1e-12);
}

TEST_F(Bootstrap, RateDiscountUsesAnchorHorizon) {
  const std::vector<Anchor> anchors{{vec({0.5}), 0.2, 2.0}};
  const BootstrapOutcome out = check_bootstrap(model, vec({1.0}), 0.05, back, 50, anchors,
                                               0.1, 0.05, 0.0, norm);
  EXPECT_NEAR(out.ratio, std::exp(-0.05 * 2.0 + 0.1 * 0.5) * 0.7 / 0.95, 1e-12);
}

TEST_F(Bootstrap, FartherAnchorRejects) {
  const std::vector<Anchor> anchors{{vec({0.5}), 0.6, 1.0}};
  const BootstrapOutcome out = check_bootstrap(model, vec({1.0}), 0.05, back, 50, anchors,
                                               0.1, 0.1, 0.0, norm);
  EXPECT_FALSE(out.passed);
  EXPECT_GT(out.ratio, 1.0);
}

TEST_F(Bootstrap, EmptyAnchorsReject) {
  const BootstrapOutcome out =
      check_bootstrap(model, vec({1.0}), 0.05, back, 50, {}, 0.1, 0.05, 0.0, norm);
  EXPECT_FALSE(out.passed);
  EXPECT_EQ(out.binding_anchor, -1);
}

TEST_F(Bootstrap, UncoveredEndpointRejects) {
  const std::vector<Anchor> anchors{{vec({0.7}), 0.16, 1.0}};
  const BootstrapOutcome out = check_bootstrap(model, vec({1.0}), 0.05, back, 50, anchors,
                                               0.1, 0.05, 0.0, norm);
  EXPECT_FALSE(out.support_ok);
  EXPECT_FALSE(out.passed);
}

TEST_F(Bootstrap, FasterRateThanTargetThrows) {
  EXPECT_THROW(check_bootstrap(model, vec({1.0}), 0.05, back, 50, {}, 0.1, 0.2, 0.0, norm),
               InvalidInput);
}

}  // namespace
}  // namespace ncp
