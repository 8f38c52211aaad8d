#include "ncp/geometry.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include <boost/random/sobol.hpp>

namespace ncp {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Smallest k >= 0 with 3^k >= value (relative tolerance absorbs log round-off).
int ceil_log3(double value) {
  int k = 0;
  double power = 1.0;
  while (power < value * (1.0 - 1e-12)) {
    power *= 3.0;
    ++k;
  }
  return k;
}

}  // namespace

Norm Norm::max(int dim, std::vector<int> angular) {
  return Norm{NormKind::kWeightedMax, Vector::Ones(dim), std::move(angular)};
}

Norm Norm::euclidean(int dim, std::vector<int> angular) {
  return Norm{NormKind::kWeightedEuclidean, Vector::Ones(dim),
              std::move(angular)};
}

bool Norm::is_angular(int axis) const {
  return std::find(angular.begin(), angular.end(), axis) != angular.end();
}

Vector Norm::difference(const Vector& a, const Vector& b) const {
  Vector diff = a - b;
  for (int axis : angular) diff[axis] = wrap_angle(diff[axis]);
  return diff;
}

void Norm::wrap(Vector& x) const {
  for (int axis : angular) x[axis] = wrap_angle(x[axis]);
}

Region Region::ball(State center, double radius, Norm norm) {
  if (!(radius > 0.0)) throw InvalidRegion("ball radius must be positive");
  if (center.size() != norm.dim())
    throw InvalidRegion("ball center and norm dimensions differ");
  Region region;
  region.kind_ = RegionKind::kBall;
  region.center_ = std::move(center);
  region.radius_ = radius;
  region.norm_ = std::move(norm);
  return region;
}

Region Region::box(Vector lower, Vector upper, Norm norm) {
  if (lower.size() != upper.size() || lower.size() != norm.dim())
    throw InvalidRegion("box bounds and norm dimensions differ");
  for (int k = 0; k < lower.size(); ++k) {
    if (!(lower[k] < upper[k])) {
      std::ostringstream msg;
      msg << "box lower bound must be below upper bound on axis " << k;
      throw InvalidRegion(msg.str());
    }
  }
  Region region;
  region.kind_ = RegionKind::kBox;
  region.center_ = 0.5 * (lower + upper);
  region.lower_ = std::move(lower);
  region.upper_ = std::move(upper);
  region.norm_ = std::move(norm);
  return region;
}

bool Region::full_circle(int axis) const {
  return kind_ == RegionKind::kBox && norm_.is_angular(axis) &&
         upper_[axis] - lower_[axis] >= kTwoPi - 1e-9;
}

bool Region::contains(const State& x) const {
  return signed_distance(x, *this) <= 0.0;
}

Vector Region::bounding_lower() const {
  if (kind_ == RegionKind::kBox) return lower_;
  return center_.array() - radius_ / norm_.weights.array();
}

Vector Region::bounding_upper() const {
  if (kind_ == RegionKind::kBox) return upper_;
  return center_.array() + radius_ / norm_.weights.array();
}

State Region::sample_interior(Rng& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Vector lo = bounding_lower();
  const Vector hi = bounding_upper();
  while (true) {
    State x(dim());
    for (int k = 0; k < dim(); ++k) x[k] = lo[k] + unit(rng) * (hi[k] - lo[k]);
    if (kind_ == RegionKind::kBox || norm_.kind == NormKind::kWeightedMax ||
        contains(x)) {
      norm_.wrap(x);
      return x;
    }
  }
}

State Region::sample_boundary(Rng& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (kind_ == RegionKind::kBall && norm_.kind == NormKind::kWeightedEuclidean) {
    std::normal_distribution<double> gauss;
    Vector dir(dim());
    for (int k = 0; k < dim(); ++k) dir[k] = gauss(rng);
    dir /= dir.norm();
    State x = center_.array() + radius_ * dir.array() / norm_.weights.array();
    norm_.wrap(x);
    return x;
  }
  std::vector<int> faces;
  for (int k = 0; k < dim(); ++k)
    if (!full_circle(k)) faces.push_back(k);
  State x = sample_interior(rng);
  if (faces.empty()) return x;
  const Vector lo = bounding_lower();
  const Vector hi = bounding_upper();
  std::uniform_int_distribution<std::size_t> pick(0, 2 * faces.size() - 1);
  const std::size_t face = pick(rng);
  const int axis = faces[face / 2];
  x[axis] = (face % 2 == 0) ? lo[axis] : hi[axis];
  norm_.wrap(x);
  return x;
}

double signed_distance(const State& x, const Region& region) {
  const Norm& norm = region.norm();
  if (region.kind() == RegionKind::kBall)
    return norm.distance(x, region.center()) - region.radius();

  double sd = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < region.dim(); ++k) {
    if (region.full_circle(k)) continue;
    const double lo = region.lower()[k];
    const double hi = region.upper()[k];
    double axis_sd;
    if (norm.is_angular(k)) {
      const double offset = wrap_angle(x[k] - 0.5 * (lo + hi));
      axis_sd = std::abs(offset) - 0.5 * (hi - lo);
    } else {
      axis_sd = std::max(lo - x[k], x[k] - hi);
    }
    sd = std::max(sd, norm.weights[k] * axis_sd);
  }
  return sd;
}

bool intersects(const Ball& ball, const Region& region) {
  return signed_distance(ball.center, region) <= ball.radius;
}

bool disjoint(const Ball& ball, const Region& region) {
  return signed_distance(ball.center, region) > ball.radius;
}

bool intersects(const Ball& a, const Ball& b, const Norm& norm) {
  return norm.distance(a.center, b.center) <= a.radius + b.radius;
}

bool interiors_overlap(const Region& a, const Region& b) {
  if (a.kind() != RegionKind::kBox || b.kind() != RegionKind::kBox) {
    // Conservative for balls: compare bounding boxes.
    return interiors_overlap(
        Region::box(a.bounding_lower(), a.bounding_upper(), a.norm()),
        Region::box(b.bounding_lower(), b.bounding_upper(), b.norm()));
  }
  for (int k = 0; k < a.dim(); ++k) {
    if (a.full_circle(k) || b.full_circle(k)) continue;
    if (a.norm().is_angular(k)) {
      const double half_a = 0.5 * (a.upper()[k] - a.lower()[k]);
      const double half_b = 0.5 * (b.upper()[k] - b.lower()[k]);
      const double gap = std::abs(wrap_angle(a.center()[k] - b.center()[k]));
      if (gap >= half_a + half_b) return false;
    } else if (a.upper()[k] <= b.lower()[k] || b.upper()[k] <= a.lower()[k]) {
      return false;
    }
  }
  return true;
}

AnnulusGridShape annulus_grid_shape(double r_max, double eps, double rho) {
  if (!(rho > 0.0))
    throw InfeasibleRate(std::numeric_limits<double>::infinity(),
                         "covering ratio rho must be positive");
  if (!(eps > 0.0) || !(eps < r_max))
    throw InvalidRegion("annulus grid requires 0 < eps < r_max");
  return {ceil_log3(2.0 * r_max / eps - 1.0), ceil_log3(1.0 / rho)};
}

std::vector<Ball> build_annulus_grid(double r_max, double eps, double rho,
                                     const Norm& norm, const State& center) {
  const int dim = static_cast<int>(center.size());
  const bool euclid = norm.kind == NormKind::kWeightedEuclidean;
  // The construction is cube based. For Euclidean norms the inner radius and
  // the ratio shrink by sqrt(d) so the max-norm guarantees carry over.
  const double root_d = euclid ? std::sqrt(static_cast<double>(dim)) : 1.0;
  const double eps_grid = eps / root_d;
  const AnnulusGridShape shape = annulus_grid_shape(r_max, eps_grid, rho / root_d);

  int pieces = 1;
  for (int s = 0; s < shape.splits; ++s) pieces *= 3;
  int blocks = 1;
  for (int k = 0; k < dim; ++k) blocks *= 3;
  long long cells_per_block = 1;
  for (int k = 0; k < dim; ++k) cells_per_block *= pieces;

  std::vector<Ball> grid;
  Vector lo(dim), hi(dim), near(dim), far(dim);
  double thickness = eps_grid;
  for (int annulus = 1; annulus <= shape.annuli; ++annulus, thickness *= 3.0) {
    const double inner = 0.5 * (thickness + eps_grid);
    const double outer = inner + thickness;
    const double seg_lo[3] = {-outer, -inner, inner};
    const double seg_hi[3] = {-inner, inner, outer};
    for (int block = 0; block < blocks; ++block) {
      int code = block;
      bool all_middle = true;
      std::vector<int> segment(dim);
      for (int k = 0; k < dim; ++k) {
        segment[k] = code % 3;
        code /= 3;
        all_middle = all_middle && segment[k] == 1;
      }
      if (all_middle) continue;
      for (long long cell = 0; cell < cells_per_block; ++cell) {
        long long c = cell;
        for (int k = 0; k < dim; ++k) {
          const int j = static_cast<int>(c % pieces);
          c /= pieces;
          const double len = (seg_hi[segment[k]] - seg_lo[segment[k]]) / pieces;
          lo[k] = seg_lo[segment[k]] + j * len;
          hi[k] = lo[k] + len;
          near[k] = (lo[k] <= 0.0 && hi[k] >= 0.0)
                        ? 0.0
                        : std::min(std::abs(lo[k]), std::abs(hi[k]));
          far[k] = std::max(std::abs(lo[k]), std::abs(hi[k]));
        }
        // Scaled coordinates: the working norm is the plain max/2-norm here.
        const double min_norm = euclid ? near.norm() : near.maxCoeff();
        const double max_norm = euclid ? far.norm() : far.maxCoeff();
        if (min_norm > r_max || max_norm < eps) continue;
        bool off_circle = false;
        for (int axis : norm.angular) {
          const double w = norm.weights[axis];
          off_circle = off_circle || lo[axis] / w >= kPi || hi[axis] / w <= -kPi;
        }
        if (off_circle) continue;
        const Vector half = 0.5 * (hi - lo);
        Ball ball;
        ball.center = center.array() + (0.5 * (lo + hi)).array() / norm.weights.array();
        norm.wrap(ball.center);
        ball.radius = euclid ? half.norm() : half.maxCoeff();
        grid.push_back(std::move(ball));
      }
    }
  }
  return grid;
}

std::vector<Ball> split_ball(const Ball& ball, const Norm& norm,
                             double radius_floor) {
  const int dim = static_cast<int>(ball.center.size());
  const double child_half = ball.radius / 3.0;
  const double child_radius =
      norm.kind == NormKind::kWeightedMax
          ? child_half
          : child_half * std::sqrt(static_cast<double>(dim));
  if (child_radius < radius_floor) {
    std::ostringstream msg;
    msg << "split of ball with radius " << ball.radius
        << " would fall below the radius floor " << radius_floor;
    throw MaxSplitsExceeded(msg.str());
  }
  int count = 1;
  for (int k = 0; k < dim; ++k) count *= 3;
  std::vector<Ball> children;
  children.reserve(count);
  for (int child = 0; child < count; ++child) {
    int code = child;
    Ball b;
    b.center = ball.center;
    for (int k = 0; k < dim; ++k) {
      const int offset = code % 3 - 1;
      code /= 3;
      b.center[k] += offset * 2.0 * child_half / norm.weights[k];
    }
    norm.wrap(b.center);
    b.radius = child_radius;
    children.push_back(std::move(b));
  }
  return children;
}

double compute_rho(double k_gain, double lambda, double alpha, double tau,
                   double lipschitz) {
  if (!(alpha < lambda)) {
    throw InfeasibleRate(std::numeric_limits<double>::infinity(),
                         "target rate alpha must be below lambda");
  }
  const double minimal_tau = std::log(k_gain) / (lambda - alpha);
  if (!(tau > minimal_tau)) {
    std::ostringstream msg;
    msg << "tau = " << tau << " leaves no positive covering ratio; need tau > "
        << minimal_tau;
    throw InfeasibleRate(minimal_tau, msg.str());
  }
  return -std::expm1(std::log(k_gain) - (lambda - alpha) * tau) /
         (1.0 + std::exp((lipschitz + alpha) * tau));
}

struct LowDiscrepancySequence::Impl {
  explicit Impl(int dim) : engine(dim) {}
  boost::random::sobol engine;
};

LowDiscrepancySequence::LowDiscrepancySequence(int dim)
    : impl_(std::make_unique<Impl>(dim)), dim_(dim) {
  impl_->engine.discard(dim);  // skip the origin
}

LowDiscrepancySequence::~LowDiscrepancySequence() = default;
LowDiscrepancySequence::LowDiscrepancySequence(LowDiscrepancySequence&&) noexcept =
    default;
LowDiscrepancySequence& LowDiscrepancySequence::operator=(
    LowDiscrepancySequence&&) noexcept = default;

Vector LowDiscrepancySequence::next() {
  constexpr double kScale = 1.0 / 18446744073709551616.0;  // 2^-64
  Vector point(dim_);
  for (int k = 0; k < dim_; ++k)
    point[k] = static_cast<double>(impl_->engine()) * kScale;
  return point;
}

}  // namespace ncp
