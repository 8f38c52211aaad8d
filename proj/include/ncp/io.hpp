#ifndef NCP_IO_HPP
#define NCP_IO_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ncp/dynamics.hpp"
#include "ncp/geometry.hpp"
#include "ncp/policy.hpp"
#include "ncp/synthesis.hpp"

namespace ncp {

using nlohmann::json;

inline constexpr const char* kAssignmentSchema = "ncp.assignments/1";
inline constexpr const char* kToolVersion = "0.1.0";

json to_json(const Vector& v);
Vector vector_from_json(const json& j);

json to_json(const Norm& norm);
Norm norm_from_json(const json& j, int dim, const std::vector<int>& angular);

json to_json(const Region& region);
Region region_from_json(const json& j, const Norm& norm);

json to_json(const ControlSignal& signal);
ControlSignal signal_from_json(const json& j);

json to_json(const Certificate& certificate);
Certificate certificate_from_json(const json& j);

json to_json(const SynthesisReport& report);

json to_json(const AssignmentSet& set);
AssignmentSet assignments_from_json(const json& j);

/// Everything needed to execute a stored policy: the model spec, the set and
/// its certificate.
struct PolicyArtifact {
  std::string model_name;
  json model_params = json::object();
  AssignmentSet set;
  Certificate certificate;
  int version = 1;
  /// sha256 of the artifact this one was derived from, if any.
  std::string parent_sha256;
};

json to_json(const PolicyArtifact& artifact);
PolicyArtifact artifact_from_json(const json& j);
SystemModel model_of(const PolicyArtifact& artifact);

struct SimulationSettings {
  double horizon = 10.0;
  int grid_starts = 0;
  int random_starts = 0;
};

/// Parsed run configuration: model, norm, region and algorithm settings.
struct RunConfig {
  std::string model_name;
  json model_params = json::object();
  SystemModel model;
  Norm norm;
  Region region;
  SynthesisConfig synthesis;
  SimulationSettings simulation;
  std::optional<Region> expansion;
};

/// Throws InvalidConfig naming the offending field.
RunConfig parse_run_config(const json& j);
SynthesisConfig synthesis_config_from_json(const json& j);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);
/// Pretty-printed with a trailing newline.
std::string dump(const json& j);

std::string sha256_hex(const std::string& bytes);

/// Header t,x0..x{d-1},segment_index; segment_index is the assignment index
/// that produced the sample.
std::string trajectory_csv(const Trajectory& trajectory);

}  // namespace ncp

#endif  // NCP_IO_HPP
