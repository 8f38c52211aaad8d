#ifndef NCP_CLI_HPP
#define NCP_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ncp/io.hpp"

namespace ncp {

enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitPartial = 2 };

struct CommonOptions {
  std::filesystem::path out_dir = "out";
  std::optional<std::uint64_t> seed;
  /// 0 falls back to NCP_THREADS, then 1.
  int threads = 0;
};

struct SimulateOptions {
  std::filesystem::path starts_path;
  int grid_starts = 0;
  int random_starts = 0;
  std::optional<double> horizon;
};

/// --threads, else NCP_THREADS, else 1.
int resolve_threads(int flag);

/// Envelope check of one trajectory against the certificate.
struct EnvelopeSummary {
  /// max_t |phi(t) - x*| - (K e^{-lambda t} |x0 - x*| + c).
  double max_violation = 0.0;
  /// First sample time after which the trajectory stays in the c-ball;
  /// infinite when the last sample is outside it.
  double time_to_c_ball = 0.0;
  double final_distance = 0.0;
};

EnvelopeSummary envelope_summary(const Trajectory& trajectory,
                                 const State& equilibrium, const Norm& norm,
                                 const Certificate& certificate);

/// `count` points evenly spaced along the boundary of the region, walked in
/// the plane of the first two coordinates (the others sit at the center).
std::vector<State> boundary_starts(const Region& region, int count);

/// Uniform points in the region from a fixed stream of `seed`.
std::vector<State> random_starts(const Region& region, int count,
                                 std::uint64_t seed);

/// Rows of comma-separated coordinates; non-numeric rows are skipped.
std::vector<State> read_starts(const std::filesystem::path& path, int dim);

int cmd_synth(const std::filesystem::path& config_path,
              const CommonOptions& options, std::ostream& out,
              std::ostream& err);

int cmd_simulate(const std::filesystem::path& assignments_path,
                 const SimulateOptions& simulate, const CommonOptions& options,
                 std::ostream& out, std::ostream& err);

int cmd_refine(const std::filesystem::path& assignments_path,
               const std::filesystem::path& config_path,
               const CommonOptions& options, std::ostream& out,
               std::ostream& err);

/// `region_json` overrides the config's "expansion" block when non-empty.
int cmd_expand(const std::filesystem::path& assignments_path,
               const std::filesystem::path& config_path,
               const std::string& region_json, const CommonOptions& options,
               std::ostream& out, std::ostream& err);

/// Pretty-prints the certificate stored in an assignments or certificate
/// file.
int cmd_report(const std::filesystem::path& path, std::ostream& out,
               std::ostream& err);

}  // namespace ncp

#endif  // NCP_CLI_HPP
