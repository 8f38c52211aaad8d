#ifndef NCP_CORE_HPP
#define NCP_CORE_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ncp {

// Upper bound on state and input dimension. Vectors are dynamically sized but
// stack allocated, which keeps the integrator free of heap traffic.
inline constexpr int kMaxDim = 8;

template <typename Scalar>
using VectorN = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

using Vector = VectorN<double>;
using State = Vector;
using Input = Vector;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A state became non-finite during integration.
class IntegrationDiverged : public Error {
 public:
  IntegrationDiverged(double time, const std::string& what)
      : Error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

class InvalidRegion : public Error {
 public:
  using Error::Error;
};

/// Rate/horizon pairing leaves no room for a positive covering ratio.
class InfeasibleRate : public Error {
 public:
  InfeasibleRate(double minimal_tau, const std::string& what)
      : Error(what), minimal_tau_(minimal_tau) {}
  double minimal_tau() const { return minimal_tau_; }

 private:
  double minimal_tau_;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class MaxSplitsExceeded : public Error {
 public:
  using Error::Error;
};

class DegenerateCandidate : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class RegionOverlap : public Error {
 public:
  using Error::Error;
};

/// Wraps an angle to (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar angle) {
  constexpr Scalar kPi = std::numbers::pi_v<Scalar>;
  Scalar wrapped = std::remainder(angle, Scalar(2) * kPi);
  if (wrapped <= -kPi) wrapped += Scalar(2) * kPi;
  return wrapped;
}

/// SplitMix64 finalizer; used to derive independent, reproducible streams.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Key for the random stream of (seed, key). Streams depend only on these
/// two integers, never on scheduling, so parallel runs stay reproducible.
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t key) {
  return mix64(mix64(seed) ^ mix64(key + 0x632be59bd9b4e019ULL));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t key) {
  return Rng(stream_key(seed, key));
}

}  // namespace ncp

#endif  // NCP_CORE_HPP
