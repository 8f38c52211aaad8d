#ifndef NCP_GEOMETRY_HPP
#define NCP_GEOMETRY_HPP

#include <cstdint>
#include <memory>
#include <vector>

#include "ncp/core.hpp"

namespace ncp {

enum class NormKind { kWeightedMax, kWeightedEuclidean };

/// Weighted max or weighted Euclidean norm, |w_k v_k| combined per kind.
/// Coordinates listed in `angular` are periodic: differences between states
/// are wrapped to (-pi, pi] before the norm is applied.
struct Norm {
  NormKind kind = NormKind::kWeightedMax;
  Vector weights;
  std::vector<int> angular;

  static Norm max(int dim, std::vector<int> angular = {});
  static Norm euclidean(int dim, std::vector<int> angular = {});

  int dim() const { return static_cast<int>(weights.size()); }
  bool is_angular(int axis) const;

  template <typename Derived>
  double operator()(const Eigen::MatrixBase<Derived>& v) const {
    const auto scaled = (weights.array() * v.array()).abs();
    if (kind == NormKind::kWeightedMax) return scaled.maxCoeff();
    return std::sqrt(scaled.square().sum());
  }

  /// a - b with periodic coordinates wrapped.
  Vector difference(const Vector& a, const Vector& b) const;
  double distance(const Vector& a, const Vector& b) const {
    return (*this)(difference(a, b));
  }
  /// Wraps the periodic coordinates of x in place.
  void wrap(Vector& x) const;
};

/// Closed ball in the working norm.
struct Ball {
  State center;
  double radius = 0.0;
};

enum class RegionKind { kBall, kBox };

/// A norm ball around a center, or an axis-aligned box. Box axes that are
/// periodic in the norm and span a full turn are treated as unconstrained.
class Region {
 public:
  static Region ball(State center, double radius, Norm norm);
  static Region box(Vector lower, Vector upper, Norm norm);

  RegionKind kind() const { return kind_; }
  int dim() const { return static_cast<int>(norm_.dim()); }
  const Norm& norm() const { return norm_; }
  const State& center() const { return center_; }
  double radius() const { return radius_; }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }

  /// Box axis that wraps all the way around the circle.
  bool full_circle(int axis) const;
  bool contains(const State& x) const;

  /// Axis-aligned bounding box (raw coordinates).
  Vector bounding_lower() const;
  Vector bounding_upper() const;

  State sample_interior(Rng& rng) const;
  State sample_boundary(Rng& rng) const;

 private:
  RegionKind kind_ = RegionKind::kBox;
  Norm norm_;
  State center_;
  double radius_ = 0.0;
  Vector lower_;
  Vector upper_;
};

/// Negative inside, zero on the boundary, positive outside.
double signed_distance(const State& x, const Region& region);

/// True when the closed ball and the region share a point. Exact for the
/// weighted max norm; may report spurious overlap for Euclidean balls.
bool intersects(const Ball& ball, const Region& region);

/// True when the closed ball is guaranteed not to touch the region.
bool disjoint(const Ball& ball, const Region& region);

bool intersects(const Ball& a, const Ball& b, const Norm& norm);

/// Interiors of two boxes overlap (periodic full-circle axes always overlap).
bool interiors_overlap(const Region& a, const Region& b);

/// Number of annuli and per-cube split depth used by the annulus grid.
struct AnnulusGridShape {
  int annuli = 0;
  int splits = 0;
};

AnnulusGridShape annulus_grid_shape(double r_max, double eps, double rho);

/// Covers the closed annulus {eps <= |x - center| <= r_max} with balls whose
/// radius is at most rho times the distance of their center to `center`.
std::vector<Ball> build_annulus_grid(double r_max, double eps, double rho,
                                     const Norm& norm, const State& center);

/// Splits the bounding cube of `ball` into 3^d sub-cubes and returns their
/// circumscribed balls. Throws MaxSplitsExceeded below `radius_floor`.
std::vector<Ball> split_ball(const Ball& ball, const Norm& norm,
                             double radius_floor);

/// Covering ratio (1 - K e^{-(lambda-alpha) tau}) / (1 + e^{(L+alpha) tau}).
double compute_rho(double k_gain, double lambda, double alpha, double tau,
                   double lipschitz);

/// Deterministic low-discrepancy points in [0,1)^d.
class LowDiscrepancySequence {
 public:
  explicit LowDiscrepancySequence(int dim);
  ~LowDiscrepancySequence();
  LowDiscrepancySequence(LowDiscrepancySequence&&) noexcept;
  LowDiscrepancySequence& operator=(LowDiscrepancySequence&&) noexcept;

  Vector next();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int dim_;
};

}  // namespace ncp

#endif  // NCP_GEOMETRY_HPP
