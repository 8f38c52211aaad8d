#ifndef NCP_MODELS_HPP
#define NCP_MODELS_HPP

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ncp/dynamics.hpp"

namespace ncp {

struct UnicycleParams {
  double speed_min = 0.0;
  double speed_max = 1.0;
  double turn_rate_max = 1.0;
};

/// State (x, y, heading), input (speed, turn rate). Heading is angular.
SystemModel make_unicycle(const UnicycleParams& params = {});

struct PendulumParams {
  double mass = 1.0;
  double length = 1.0;
  double gravity = 1.0;
  double torque_limit = 20.0;
};

/// m l^2 theta'' = m g l sin(theta) + u, theta = 0 upright. State
/// (theta, theta'), theta angular.
SystemModel make_inverted_pendulum(const PendulumParams& params = {});

/// x' = A x + B u with a box of inputs; equilibrium at the origin.
SystemModel make_linear(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                        const Input& input_lower, const Input& input_upper);

/// Named model factories configured from a JSON parameter object. The
/// built-ins are unicycle, inverted_pendulum and linear_test.
class ModelRegistry {
 public:
  using Factory = std::function<SystemModel(const nlohmann::json& params)>;

  static ModelRegistry& instance();

  void add(const std::string& name, Factory factory);
  bool contains(const std::string& name) const;
  SystemModel create(const std::string& name,
                     const nlohmann::json& params) const;
  std::vector<std::string> names() const;

 private:
  ModelRegistry();
  std::map<std::string, Factory> factories_;
};

}  // namespace ncp

#endif  // NCP_MODELS_HPP
