#include "ncp/models.hpp"

namespace ncp {

namespace {

Vector to_vector(const std::vector<double>& values) {
  Vector v(static_cast<int>(values.size()));
  for (std::size_t k = 0; k < values.size(); ++k) v[k] = values[k];
  return v;
}

Eigen::MatrixXd to_matrix(const nlohmann::json& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto m = n == 0 ? 0 : static_cast<Eigen::Index>(rows.at(0).size());
  Eigen::MatrixXd out(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows.at(i).size()) != m)
      throw InvalidConfig("matrix rows must have equal length");
    for (Eigen::Index j = 0; j < m; ++j) out(i, j) = rows.at(i).at(j).get<double>();
  }
  return out;
}

}  // namespace

SystemModel make_unicycle(const UnicycleParams& params) {
  SystemModel model;
  model.id = "unicycle";
  model.dim = 3;
  model.input_dim = 2;
  model.vector_field = [](const State& x, const Input& u) {
    Vector dx(3);
    dx << u[0] * std::cos(x[2]), u[0] * std::sin(x[2]), u[1];
    return dx;
  };
  model.input_lower = Vector(2);
  model.input_lower << params.speed_min, -params.turn_rate_max;
  model.input_upper = Vector(2);
  model.input_upper << params.speed_max, params.turn_rate_max;
  model.equilibrium_state = State::Zero(3);
  model.equilibrium_input = Input::Zero(2);
  model.angular_dims = {2};
  return model;
}

SystemModel make_inverted_pendulum(const PendulumParams& params) {
  if (!(params.mass > 0.0) || !(params.length > 0.0))
    throw InvalidConfig("pendulum mass and length must be positive");
  SystemModel model;
  model.id = "inverted_pendulum";
  model.dim = 2;
  model.input_dim = 1;
  const double stiffness = params.gravity / params.length;
  const double inv_inertia = 1.0 / (params.mass * params.length * params.length);
  model.vector_field = [stiffness, inv_inertia](const State& x, const Input& u) {
    Vector dx(2);
    dx << x[1], stiffness * std::sin(x[0]) + inv_inertia * u[0];
    return dx;
  };
  model.input_lower = Vector::Constant(1, -params.torque_limit);
  model.input_upper = Vector::Constant(1, params.torque_limit);
  model.equilibrium_state = State::Zero(2);
  model.equilibrium_input = Input::Zero(1);
  model.angular_dims = {0};
  return model;
}

SystemModel make_linear(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                        const Input& input_lower, const Input& input_upper) {
  if (a.rows() != a.cols() || b.rows() != a.rows() ||
      input_lower.size() != b.cols() || input_upper.size() != b.cols())
    throw InvalidConfig("linear model matrices have inconsistent shapes");
  SystemModel model;
  model.id = "linear_test";
  model.dim = static_cast<int>(a.rows());
  model.input_dim = static_cast<int>(b.cols());
  model.vector_field = [a, b](const State& x, const Input& u) {
    return Vector(a * x + b * u);
  };
  model.input_lower = input_lower;
  model.input_upper = input_upper;
  model.equilibrium_state = State::Zero(model.dim);
  model.equilibrium_input = Input::Zero(model.input_dim);
  return model;
}

ModelRegistry& ModelRegistry::instance() {
  static ModelRegistry registry;
  return registry;
}

ModelRegistry::ModelRegistry() {
  add("unicycle", [](const nlohmann::json& p) {
    UnicycleParams params;
    params.speed_min = p.value("speed_min", params.speed_min);
    params.speed_max = p.value("speed_max", params.speed_max);
    params.turn_rate_max = p.value("turn_rate_max", params.turn_rate_max);
    return make_unicycle(params);
  });
  add("inverted_pendulum", [](const nlohmann::json& p) {
    PendulumParams params;
    params.mass = p.value("mass", params.mass);
    params.length = p.value("length", params.length);
    params.gravity = p.value("gravity", params.gravity);
    params.torque_limit = p.value("torque_limit", params.torque_limit);
    return make_inverted_pendulum(params);
  });
  add("linear_test", [](const nlohmann::json& p) {
    const Eigen::MatrixXd a =
        p.contains("A") ? to_matrix(p.at("A")) : Eigen::MatrixXd::Zero(1, 1);
    const Eigen::MatrixXd b =
        p.contains("B") ? to_matrix(p.at("B")) : Eigen::MatrixXd::Ones(1, 1);
    const Input lower = p.contains("input_lower")
                            ? to_vector(p.at("input_lower").get<std::vector<double>>())
                            : Input::Constant(b.cols(), -1.0);
    const Input upper = p.contains("input_upper")
                            ? to_vector(p.at("input_upper").get<std::vector<double>>())
                            : Input::Constant(b.cols(), 1.0);
    return make_linear(a, b, lower, upper);
  });
}

void ModelRegistry::add(const std::string& name, Factory factory) {
  factories_[name] = std::move(factory);
}

bool ModelRegistry::contains(const std::string& name) const {
  return factories_.count(name) > 0;
}

SystemModel ModelRegistry::create(const std::string& name,
                                  const nlohmann::json& params) const {
  const auto it = factories_.find(name);
  if (it == factories_.end())
    throw InvalidConfig("unknown model '" + name + "'");
  SystemModel model = it->second(params.is_null() ? nlohmann::json::object() : params);
  model.id = name;
  return model;
}

std::vector<std::string> ModelRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, factory] : factories_) out.push_back(name);
  return out;
}

}  // namespace ncp
