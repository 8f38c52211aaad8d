#include "ncp/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "ncp/models.hpp"

namespace ncp {

namespace {

const char* origin_name(CellOrigin origin) {
  return origin == CellOrigin::kDirect ? "direct" : "bootstrap";
}

CellOrigin origin_from(const std::string& name) {
  if (name == "direct") return CellOrigin::kDirect;
  if (name == "bootstrap") return CellOrigin::kBootstrap;
  throw InvalidInput("unknown cell origin '" + name + "'");
}

json ball_json(const Ball& ball) {
  return {{"center", to_json(ball.center)}, {"radius", ball.radius}};
}

// Reads an optional field, reporting the full path on a type error.
template <typename T>
void read(const json& j, const char* key, T& out, const std::string& prefix) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidConfig(prefix + key + ": wrong type");
  }
}

void hex_append(std::ostringstream& out, const unsigned char* data,
                unsigned size) {
  for (unsigned i = 0; i < size; ++i)
    out << std::hex << std::setw(2) << std::setfill('0')
        << static_cast<int>(data[i]);
}

}  // namespace

json to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v[k]);
  return out;
}

Vector vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  if (static_cast<int>(values.size()) > kMaxDim)
    throw InvalidInput("vector longer than the supported dimension");
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<Eigen::Index>(values.size()));
}

json to_json(const Norm& norm) {
  return {{"kind", norm.kind == NormKind::kWeightedMax ? "max" : "euclidean"},
          {"weights", to_json(norm.weights)},
          {"angular", norm.angular}};
}

Norm norm_from_json(const json& j, int dim, const std::vector<int>& angular) {
  const std::string kind = j.value("kind", std::string("max"));
  Norm norm;
  if (kind == "max")
    norm = Norm::max(dim, angular);
  else if (kind == "euclidean")
    norm = Norm::euclidean(dim, angular);
  else
    throw InvalidConfig("norm.kind: must be 'max' or 'euclidean'");
  if (j.contains("weights")) {
    norm.weights = vector_from_json(j.at("weights"));
    if (norm.weights.size() != dim || (norm.weights.array() <= 0.0).any())
      throw InvalidConfig("norm.weights: need one positive weight per state");
  }
  if (j.contains("angular")) norm.angular = j.at("angular").get<std::vector<int>>();
  return norm;
}

json to_json(const Region& region) {
  if (region.kind() == RegionKind::kBall)
    return {{"kind", "ball"},
            {"center", to_json(region.center())},
            {"radius", region.radius()}};
  return {{"kind", "box"},
          {"lower", to_json(region.lower())},
          {"upper", to_json(region.upper())}};
}

Region region_from_json(const json& j, const Norm& norm) {
  const std::string kind = j.value("kind", std::string("box"));
  try {
    if (kind == "ball")
      return Region::ball(vector_from_json(j.at("center")),
                          j.at("radius").get<double>(), norm);
    if (kind == "box")
      return Region::box(vector_from_json(j.at("lower")),
                         vector_from_json(j.at("upper")), norm);
  } catch (const json::exception& err) {
    throw InvalidConfig(std::string("region: ") + err.what());
  } catch (const InvalidRegion& err) {
    throw InvalidConfig(std::string("region: ") + err.what());
  }
  throw InvalidConfig("region.kind: must be 'ball' or 'box'");
}

json to_json(const ControlSignal& signal) {
  json steps = json::array();
  for (int k = 0; k < signal.steps(); ++k) steps.push_back(to_json(Vector(signal.at(k))));
  return {{"dt", signal.dt}, {"values", steps}};
}

ControlSignal signal_from_json(const json& j) {
  ControlSignal signal;
  signal.dt = j.at("dt").get<double>();
  const json& steps = j.at("values");
  const auto count = static_cast<Eigen::Index>(steps.size());
  const Eigen::Index inputs = count == 0 ? 0 : static_cast<Eigen::Index>(steps[0].size());
  signal.values.resize(inputs, count);
  for (Eigen::Index k = 0; k < count; ++k)
    signal.values.col(k) = vector_from_json(steps[static_cast<std::size_t>(k)]);
  return signal;
}

json to_json(const Certificate& c) {
  return {{"alpha", c.alpha},
          {"tau", c.tau},
          {"lipschitz", c.lipschitz},
          {"speed_bound", c.speed_bound},
          {"inflation", c.inflation},
          {"eps", c.eps},
          {"delta", c.delta},
          {"lambda", c.lambda},
          {"k_gain", c.k_gain},
          {"c", c.c},
          {"core_tau", c.core_tau},
          {"core_lipschitz", c.core_lipschitz},
          {"covered", c.covered},
          {"uncovered_samples", c.uncovered_samples},
          {"seed", c.seed},
          {"dt", c.dt},
          {"boundary_samples", c.boundary_samples},
          {"pair_samples", c.pair_samples},
          {"speed_samples", c.speed_samples},
          {"covering_samples", c.covering_samples}};
}

Certificate certificate_from_json(const json& j) {
  Certificate c;
  c.alpha = j.at("alpha").get<double>();
  c.tau = j.at("tau").get<double>();
  c.lipschitz = j.at("lipschitz").get<double>();
  c.speed_bound = j.at("speed_bound").get<double>();
  c.inflation = j.at("inflation").get<double>();
  c.eps = j.at("eps").get<double>();
  c.delta = j.at("delta").get<double>();
  c.lambda = j.at("lambda").get<double>();
  c.k_gain = j.at("k_gain").get<double>();
  c.c = j.at("c").get<double>();
  c.core_tau = j.at("core_tau").get<double>();
  c.core_lipschitz = j.at("core_lipschitz").get<double>();
  c.covered = j.at("covered").get<bool>();
  c.uncovered_samples = j.at("uncovered_samples").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.dt = j.at("dt").get<double>();
  c.boundary_samples = j.at("boundary_samples").get<int>();
  c.pair_samples = j.at("pair_samples").get<int>();
  c.speed_samples = j.at("speed_samples").get<int>();
  c.covering_samples = j.at("covering_samples").get<int>();
  return c;
}

json to_json(const SynthesisReport& r) {
  json failed = json::array();
  for (const Ball& ball : r.failed) failed.push_back(ball_json(ball));
  json uncovered = json::array();
  for (const State& x : r.covering.uncovered) uncovered.push_back(to_json(x));
  return {{"initial_cells", r.initial_cells},
          {"verified_cells", r.verified_cells},
          {"failed_cells", r.failed_cells},
          {"bootstrapped_cells", r.bootstrapped_cells},
          {"trimmed_cells", r.trimmed_cells},
          {"searched_cells", r.searched_cells},
          {"budget_exhausted", r.budget_exhausted},
          {"min_alpha", r.min_alpha},
          {"mean_alpha", r.mean_alpha},
          {"previous_min_alpha", r.previous_min_alpha},
          {"previous_mean_alpha", r.previous_mean_alpha},
          {"total_signals", r.total_signals},
          {"complete", r.complete},
          {"failed", failed},
          {"covering",
           {{"delta", r.covering.delta},
            {"inscribed", r.covering.inscribed},
            {"nesting_ok", r.covering.nesting_ok},
            {"samples_checked", r.covering.samples_checked},
            {"covered_fraction", r.covering.covered_fraction()},
            {"uncovered", uncovered}}},
          {"certificate", to_json(r.certificate)}};
}

json to_json(const AssignmentSet& set) {
  json triples = json::array();
  for (const Triple& t : set.triples)
    triples.push_back({{"center", to_json(t.center)},
                       {"radius", t.radius},
                       {"signal", t.signal},
                       {"tau", t.tau},
                       {"alpha", t.alpha},
                       {"slack", t.slack},
                       {"origin", origin_name(t.origin)},
                       {"verified", t.verified}});
  json signals = json::array();
  for (const ControlSignal& s : set.alphabet.signals) signals.push_back(to_json(s));
  json extensions = json::array();
  for (const Region& r : set.extensions) extensions.push_back(to_json(r));
  return {{"schema", kAssignmentSchema},
          {"model_id", set.model_id},
          {"norm", to_json(set.norm)},
          {"region", to_json(set.region)},
          {"extensions", extensions},
          {"equilibrium", to_json(set.equilibrium)},
          {"alphabet", signals},
          {"triples", triples}};
}

AssignmentSet assignments_from_json(const json& j) {
  if (j.value("schema", std::string()) != kAssignmentSchema)
    throw InvalidInput("unsupported assignment schema");
  AssignmentSet set;
  set.model_id = j.at("model_id").get<std::string>();
  set.equilibrium = vector_from_json(j.at("equilibrium"));
  const int dim = static_cast<int>(set.equilibrium.size());
  set.norm = norm_from_json(j.at("norm"), dim, {});
  set.region = region_from_json(j.at("region"), set.norm);
  for (const json& r : j.at("extensions")) set.extensions.push_back(region_from_json(r, set.norm));
  for (const json& s : j.at("alphabet")) set.alphabet.signals.push_back(signal_from_json(s));
  for (const json& t : j.at("triples")) {
    Triple triple;
    triple.center = vector_from_json(t.at("center"));
    triple.radius = t.at("radius").get<double>();
    triple.signal = t.at("signal").get<int>();
    triple.tau = t.at("tau").get<double>();
    triple.alpha = t.at("alpha").get<double>();
    triple.slack = t.at("slack").get<double>();
    triple.origin = origin_from(t.at("origin").get<std::string>());
    triple.verified = t.at("verified").get<bool>();
    if (triple.signal <= 0 || triple.signal >= set.alphabet.size())
      throw InvalidInput("triple references a missing signal");
    set.triples.push_back(std::move(triple));
  }
  if (set.alphabet.size() == 0) throw InvalidInput("assignment set has no default control");
  return set;
}

json to_json(const PolicyArtifact& a) {
  json out = {{"version", a.version},
          {"tool_version", kToolVersion},
          {"model", {{"name", a.model_name}, {"params", a.model_params}}},
          {"certificate", to_json(a.certificate)},
          {"assignments", to_json(a.set)}};
  if (!a.parent_sha256.empty()) out["parent_sha256"] = a.parent_sha256;
  return out;
}

PolicyArtifact artifact_from_json(const json& j) {
  PolicyArtifact a;
  a.version = j.at("version").get<int>();
  a.parent_sha256 = j.value("parent_sha256", std::string());
  a.model_name = j.at("model").at("name").get<std::string>();
  a.model_params = j.at("model").value("params", json::object());
  a.certificate = certificate_from_json(j.at("certificate"));
  a.set = assignments_from_json(j.at("assignments"));
  return a;
}

SystemModel model_of(const PolicyArtifact& artifact) {
  return ModelRegistry::instance().create(artifact.model_name, artifact.model_params);
}

SynthesisConfig synthesis_config_from_json(const json& j) {
  SynthesisConfig c;
  const std::string p;
  read(j, "alpha", c.alpha, p);
  read(j, "tau_max", c.tau_max, p);
  read(j, "eps", c.eps, p);
  read(j, "max_splits", c.max_splits, p);
  read(j, "dt", c.dt, p);
  read(j, "tau0", c.tau0, p);
  if (j.contains("grid_mode")) {
    const std::string mode = j.at("grid_mode").get<std::string>();
    if (mode == "radius_fraction")
      c.grid_mode = GridMode::kRadiusFraction;
    else if (mode == "covering_ratio")
      c.grid_mode = GridMode::kCoveringRatio;
    else
      throw InvalidConfig("grid_mode: must be 'radius_fraction' or 'covering_ratio'");
  }
  read(j, "initial_fraction", c.initial_fraction, p);
  read(j, "lambda", c.lambda, p);
  read(j, "k_gain", c.k_gain, p);
  read(j, "lipschitz", c.lipschitz, p);
  read(j, "excursion_check", c.excursion_check, p);
  read(j, "covering_samples", c.covering_samples, p);
  read(j, "bootstrap", c.bootstrap, p);
  read(j, "bootstrap_rate_fraction", c.bootstrap_rate_fraction, p);
  read(j, "bootstrap_stride", c.bootstrap_stride, p);
  read(j, "max_cells", c.max_cells, p);
  read(j, "seed", c.seed, p);
  read(j, "threads", c.threads, p);
  if (j.contains("search")) {
    const json& s = j.at("search");
    read(s, "rollouts", c.search.rollouts, "search.");
    read(s, "iterations", c.search.iterations, "search.");
    read(s, "temperature", c.search.temperature, "search.");
    read(s, "noise_hold", c.search.noise_hold, "search.");
    if (s.contains("noise_scale")) c.search.noise_scale = vector_from_json(s.at("noise_scale"));
  }
  if (j.contains("estimation")) {
    const json& e = j.at("estimation");
    read(e, "boundary_samples", c.estimation.boundary_samples, "estimation.");
    read(e, "pair_samples", c.estimation.pair_samples, "estimation.");
    read(e, "speed_samples", c.estimation.speed_samples, "estimation.");
    read(e, "inflation", c.estimation.inflation, "estimation.");
  }
  c.validate();
  return c;
}

RunConfig parse_run_config(const json& j) {
  RunConfig rc;
  if (!j.is_object()) throw InvalidConfig("config: must be a JSON object");
  if (!j.contains("model")) throw InvalidConfig("model: missing");
  const json& m = j.at("model");
  read(m, "name", rc.model_name, "model.");
  rc.model_params = m.value("params", json::object());
  try {
    rc.model = ModelRegistry::instance().create(rc.model_name, rc.model_params);
  } catch (const json::exception& err) {
    throw InvalidConfig(std::string("model.params: ") + err.what());
  } catch (const InvalidInput& err) {
    throw InvalidConfig(std::string("model.params: ") + err.what());
  }
  rc.norm = norm_from_json(j.value("norm", json::object()), rc.model.dim,
                           rc.model.angular_dims);
  if (!j.contains("region")) throw InvalidConfig("region: missing");
  rc.region = region_from_json(j.at("region"), rc.norm);
  if (rc.region.dim() != rc.model.dim)
    throw InvalidConfig("region: dimension does not match the model");
  rc.synthesis = synthesis_config_from_json(j.value("synthesis", json::object()));
  if (j.contains("simulation")) {
    const json& s = j.at("simulation");
    read(s, "horizon", rc.simulation.horizon, "simulation.");
    read(s, "grid_starts", rc.simulation.grid_starts, "simulation.");
    read(s, "random_starts", rc.simulation.random_starts, "simulation.");
  }
  if (j.contains("expansion")) rc.expansion = region_from_json(j.at("expansion"), rc.norm);
  return rc;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned size = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &size, EVP_sha256(), nullptr);
  std::ostringstream out;
  hex_append(out, digest, size);
  return out.str();
}

std::string trajectory_csv(const Trajectory& traj) {
  std::ostringstream out;
  out << std::setprecision(17);
  const int dim = traj.states.empty() ? 0 : static_cast<int>(traj.states[0].size());
  out << "t";
  for (int k = 0; k < dim; ++k) out << ",x" << k;
  out << ",segment_index\n";
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    out << traj.times[i];
    for (int k = 0; k < dim; ++k) out << ',' << traj.states[i][k];
    out << ',' << (i < traj.active.size() ? traj.active[i] : 0) << '\n';
  }
  return out.str();
}

}  // namespace ncp
