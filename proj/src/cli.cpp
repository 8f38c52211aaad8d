#include "ncp/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "ncp/models.hpp"
#include "ncp/parallel.hpp"
#include "ncp/synthesis.hpp"

namespace ncp {

namespace fs = std::filesystem;

namespace {

constexpr double kViolationTolerance = 1e-6;
constexpr std::uint64_t kStartsKey = 0x73746172ULL;

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

// Writes the run manifest listing every artifact with its digest.
class Manifest {
 public:
  Manifest(std::string command, fs::path out_dir)
      : command_(std::move(command)), out_dir_(std::move(out_dir)),
        started_(utc_now()), clock_(std::chrono::steady_clock::now()) {}

  void set_config(const fs::path& path, const std::string& bytes) {
    config_path_ = path.string();
    config_hash_ = sha256_hex(bytes);
  }
  void set_seed(std::uint64_t seed) { seed_ = seed; }
  void add_input(const fs::path& path, const std::string& bytes) {
    inputs_.push_back({{"path", path.string()}, {"sha256", sha256_hex(bytes)}});
  }

  void write(const std::string& name, const std::string& bytes) {
    write_file(out_dir_ / name, bytes);
    artifacts_.push_back({{"path", name}, {"sha256", sha256_hex(bytes)}});
  }

  void log(const std::string& line) { log_ << line << '\n'; }

  void finish(int exit_code) {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_).count();
    log("exit " + std::to_string(exit_code) + " after " + std::to_string(wall) + " s");
    write("run.log", log_.str());
    json manifest = {{"command", command_},
                     {"tool_version", kToolVersion},
                     {"seed", seed_},
                     {"exit_code", exit_code},
                     {"started_utc", started_},
                     {"finished_utc", utc_now()},
                     {"wall_time_seconds", wall},
                     {"inputs", inputs_},
                     {"artifacts", artifacts_}};
    if (!config_path_.empty()) {
      manifest["config_path"] = config_path_;
      manifest["config_sha256"] = config_hash_;
    }
    write_file(out_dir_ / "manifest.json", dump(manifest));
  }

 private:
  std::string command_;
  fs::path out_dir_;
  std::string started_;
  std::chrono::steady_clock::time_point clock_;
  std::string config_path_;
  std::string config_hash_;
  std::uint64_t seed_ = 0;
  json inputs_ = json::array();
  json artifacts_ = json::array();
  std::ostringstream log_;
};

RunConfig load_config(const std::string& bytes,
                      const CommonOptions& options) {
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw InvalidConfig("config: " + std::string(e.what()));
  }
  RunConfig rc = parse_run_config(j);
  if (options.seed) rc.synthesis.seed = *options.seed;
  rc.synthesis.threads = resolve_threads(options.threads);
  return rc;
}

PolicyArtifact load_artifact(const std::string& bytes) {
  try {
    return artifact_from_json(json::parse(bytes));
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("assignments: ") + e.what());
  }
}

std::string summary_line(const SynthesisReport& r) {
  std::ostringstream out;
  out << "cells: verified " << r.verified_cells << ", bootstrapped "
      << r.bootstrapped_cells << ", failed " << r.failed_cells << "; alpha min "
      << r.min_alpha << " mean " << r.mean_alpha << "; covered fraction "
      << r.covering.covered_fraction() << (r.complete ? "" : " (partial)");
  return out.str();
}

void write_synthesis(Manifest& manifest, const PolicyArtifact& artifact,
                     const SynthesisReport& report) {
  manifest.write("assignments.json", dump(to_json(artifact)));
  manifest.write("certificate.json", dump(to_json(artifact.certificate)));
  manifest.write("report.json", dump(to_json(report)));
}

// Shared error funnel: every command reports failures the same way.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const IntegrationDiverged& e) {
    err << "error: integration diverged at t=" << e.time() << ": " << e.what() << '\n';
  } catch (const InfeasibleRate& e) {
    err << "error: " << e.what() << " (minimal tau " << e.minimal_tau() << ")\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return kExitError;
}

}  // namespace

int resolve_threads(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("NCP_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

EnvelopeSummary envelope_summary(const Trajectory& traj, const State& x_star,
                                 const Norm& norm, const Certificate& cert) {
  EnvelopeSummary s;
  s.max_violation = -std::numeric_limits<double>::infinity();
  const double d0 = norm.distance(traj.states.front(), x_star);
  double entered = 0.0;
  bool inside = false;
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const double d = norm.distance(traj.states[i], x_star);
    const double bound = cert.k_gain * std::exp(-cert.lambda * traj.times[i]) * d0 + cert.c;
    s.max_violation = std::max(s.max_violation, d - bound);
    if (d <= cert.c) {
      if (!inside) entered = traj.times[i];
      inside = true;
    } else {
      inside = false;
    }
    s.final_distance = d;
  }
  s.time_to_c_ball = inside ? entered : std::numeric_limits<double>::infinity();
  return s;
}

std::vector<State> boundary_starts(const Region& region, int count) {
  std::vector<State> out;
  const Norm& norm = region.norm();
  const int dim = region.dim();
  if (count <= 0) return out;
  Vector lo = region.bounding_lower();
  Vector hi = region.bounding_upper();
  for (int k = 0; k < dim; ++k) {
    if (region.kind() == RegionKind::kBox && region.full_circle(k)) {
      lo[k] = -std::numbers::pi;
      hi[k] = std::numbers::pi;
    }
  }
  const State mid = region.kind() == RegionKind::kBall ? region.center() : State(0.5 * (lo + hi));
  for (int i = 0; i < count; ++i) {
    State x = mid;
    if (dim == 1) {
      x[0] = i % 2 == 0 ? lo[0] : hi[0];
    } else if (region.kind() == RegionKind::kBall && norm.kind == NormKind::kWeightedEuclidean) {
      const double angle = 2.0 * std::numbers::pi * i / count;
      x[0] += region.radius() * std::cos(angle) / norm.weights[0];
      x[1] += region.radius() * std::sin(angle) / norm.weights[1];
    } else {
      // Counter-clockwise walk around the rectangle from the lower corner.
      const double w = hi[0] - lo[0];
      const double h = hi[1] - lo[1];
      double s = 2.0 * (w + h) * i / count;
      if (s < w) {
        x[0] = lo[0] + s;
        x[1] = lo[1];
      } else if ((s -= w) < h) {
        x[0] = hi[0];
        x[1] = lo[1] + s;
      } else if ((s -= h) < w) {
        x[0] = hi[0] - s;
        x[1] = hi[1];
      } else {
        s -= w;
        x[0] = lo[0];
        x[1] = hi[1] - s;
      }
    }
    norm.wrap(x);
    out.push_back(x);
  }
  return out;
}

std::vector<State> random_starts(const Region& region, int count,
                                 std::uint64_t seed) {
  Rng rng = make_rng(seed, kStartsKey);
  std::vector<State> out;
  for (int i = 0; i < count; ++i) out.push_back(region.sample_interior(rng));
  return out;
}

std::vector<State> read_starts(const fs::path& path, int dim) {
  std::istringstream in(read_file(path));
  std::vector<State> out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::vector<double> values;
    std::string cell;
    bool numeric = true;
    while (std::getline(row, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric || values.empty()) continue;
    if (static_cast<int>(values.size()) != dim)
      throw InvalidInput("start row has " + std::to_string(values.size()) +
                         " coordinates, expected " + std::to_string(dim));
    out.push_back(Eigen::Map<const Eigen::VectorXd>(values.data(), dim));
  }
  return out;
}

int cmd_synth(const fs::path& config_path, const CommonOptions& options,
              std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const std::string bytes = read_file(config_path);
    const RunConfig rc = load_config(bytes, options);
    Manifest manifest("synth", options.out_dir);
    manifest.set_config(config_path, bytes);
    manifest.set_seed(rc.synthesis.seed);
    manifest.write("config.json", bytes);

    const SynthesisResult result = synthesize(rc.model, rc.region, rc.synthesis);
    PolicyArtifact artifact{rc.model_name, rc.model_params, result.assignments,
                            result.certificate, 1, {}};
    write_synthesis(manifest, artifact, result.report);
    manifest.log(summary_line(result.report));
    out << summary_line(result.report) << '\n';
    const int code = result.report.complete ? kExitOk : kExitPartial;
    manifest.finish(code);
    return code;
  });
}

int cmd_simulate(const fs::path& assignments_path,
                 const SimulateOptions& simulate, const CommonOptions& options,
                 std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const std::string bytes = read_file(assignments_path);
    const PolicyArtifact artifact = load_artifact(bytes);
    const SystemModel model = model_of(artifact);
    const AssignmentSet& set = artifact.set;
    const std::uint64_t seed = options.seed.value_or(artifact.certificate.seed);
    const double horizon = simulate.horizon.value_or(10.0);

    std::vector<State> starts;
    if (!simulate.starts_path.empty()) starts = read_starts(simulate.starts_path, model.dim);
    for (State& x : boundary_starts(set.region, simulate.grid_starts)) starts.push_back(std::move(x));
    for (State& x : random_starts(set.region, simulate.random_starts, seed))
      starts.push_back(std::move(x));
    if (starts.empty()) throw InvalidInput("no start states: use --starts, --grid-starts or --random-starts");

    Manifest manifest("simulate", options.out_dir);
    manifest.add_input(assignments_path, bytes);
    manifest.set_seed(seed);

    std::vector<Trajectory> trajectories(starts.size());
    std::vector<std::string> failures(starts.size());
    parallel_for(starts.size(), resolve_threads(options.threads), [&](std::size_t i) {
      try {
        trajectories[i] = rollout(model, set, starts[i], horizon);
      } catch (const IntegrationDiverged& e) {
        failures[i] = "trajectory " + std::to_string(i) + ": " + e.what();
      }
    });
    for (const std::string& f : failures)
      if (!f.empty()) throw InvalidInput("divergence in " + f);

    std::ostringstream summary;
    summary << std::setprecision(17);
    summary << "trajectory";
    for (int k = 0; k < model.dim; ++k) summary << ",x0_" << k;
    summary << ",max_violation,time_to_c_ball,final_distance\n";
    bool ok = true;
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
      std::ostringstream name;
      name << "trajectory_" << std::setw(4) << std::setfill('0') << i << ".csv";
      manifest.write(name.str(), trajectory_csv(trajectories[i]));
      const EnvelopeSummary s = envelope_summary(trajectories[i], set.equilibrium,
                                                 set.norm, artifact.certificate);
      summary << i;
      for (int k = 0; k < model.dim; ++k) summary << ',' << starts[i][k];
      summary << ',' << s.max_violation << ',' << s.time_to_c_ball << ','
              << s.final_distance << '\n';
      ok = ok && s.max_violation <= kViolationTolerance;
      worst = std::max(worst, s.max_violation);
    }
    manifest.write("summary.csv", summary.str());

    // Mean distance to x* on the common time grid.
    std::size_t samples = std::numeric_limits<std::size_t>::max();
    for (const Trajectory& t : trajectories) samples = std::min(samples, t.states.size());
    std::ostringstream mean;
    mean << std::setprecision(17) << "t,mean_norm\n";
    for (std::size_t k = 0; k < samples; ++k) {
      double total = 0.0;
      for (const Trajectory& t : trajectories) total += set.norm.distance(t.states[k], set.equilibrium);
      mean << trajectories[0].times[k] << ',' << total / trajectories.size() << '\n';
    }
    manifest.write("mean_norm.csv", mean.str());

    std::ostringstream line;
    line << trajectories.size() << " trajectories, worst envelope violation " << worst;
    manifest.log(line.str());
    out << line.str() << '\n';
    const int code = ok ? kExitOk : kExitPartial;
    manifest.finish(code);
    return code;
  });
}

int cmd_refine(const fs::path& assignments_path, const fs::path& config_path,
               const CommonOptions& options, std::ostream& out,
               std::ostream& err) {
  return guarded(err, [&] {
    const std::string bytes = read_file(assignments_path);
    const std::string config_bytes = read_file(config_path);
    const RunConfig rc = load_config(config_bytes, options);
    const PolicyArtifact artifact = load_artifact(bytes);
    const SystemModel model = model_of(artifact);

    Manifest manifest("refine", options.out_dir);
    manifest.add_input(assignments_path, bytes);
    manifest.set_config(config_path, config_bytes);
    manifest.set_seed(rc.synthesis.seed);
    manifest.write("config.json", config_bytes);

    const SynthesisResult result =
        refine(model, artifact.set, artifact.certificate, rc.synthesis);
    PolicyArtifact refined{artifact.model_name, artifact.model_params,
                           result.assignments, result.certificate,
                           artifact.version + 1, sha256_hex(bytes)};
    write_synthesis(manifest, refined, result.report);
    std::ostringstream line;
    line << "alpha min " << result.report.previous_min_alpha << " -> "
         << result.report.min_alpha << ", mean " << result.report.previous_mean_alpha
         << " -> " << result.report.mean_alpha;
    manifest.log(line.str());
    manifest.log(summary_line(result.report));
    out << line.str() << '\n' << summary_line(result.report) << '\n';
    const int code = result.report.complete ? kExitOk : kExitPartial;
    manifest.finish(code);
    return code;
  });
}

int cmd_expand(const fs::path& assignments_path, const fs::path& config_path,
               const std::string& region_json, const CommonOptions& options,
               std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const std::string bytes = read_file(assignments_path);
    const std::string config_bytes = read_file(config_path);
    const RunConfig rc = load_config(config_bytes, options);
    const PolicyArtifact artifact = load_artifact(bytes);
    const SystemModel model = model_of(artifact);

    Region new_region;
    if (!region_json.empty()) {
      json j;
      try {
        j = json::parse(region_json);
      } catch (const json::parse_error& e) {
        throw InvalidConfig(std::string("region: ") + e.what());
      }
      new_region = region_from_json(j, artifact.set.norm);
    } else if (rc.expansion) {
      new_region = region_from_json(to_json(*rc.expansion), artifact.set.norm);
    } else {
      throw InvalidConfig("expansion: missing (use --region or an \"expansion\" block)");
    }

    Manifest manifest("expand", options.out_dir);
    manifest.add_input(assignments_path, bytes);
    manifest.set_config(config_path, config_bytes);
    manifest.set_seed(rc.synthesis.seed);
    manifest.write("config.json", config_bytes);

    const SynthesisResult result =
        expand(model, artifact.set, artifact.certificate, new_region, rc.synthesis);
    PolicyArtifact expanded{artifact.model_name, artifact.model_params,
                            result.assignments, result.certificate,
                            artifact.version + 1, sha256_hex(bytes)};
    write_synthesis(manifest, expanded, result.report);
    std::ostringstream line;
    line << "regions: " << artifact.set.extensions.size() + 1 << " -> "
         << result.assignments.extensions.size() + 1 << "; triples "
         << artifact.set.size() << " -> " << result.assignments.size();
    manifest.log(line.str());
    manifest.log(summary_line(result.report));
    out << line.str() << '\n' << summary_line(result.report) << '\n';
    const int code = result.report.failed.empty() ? kExitOk : kExitPartial;
    manifest.finish(code);
    return code;
  });
}

int cmd_report(const fs::path& path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const json j = json::parse(read_file(path));
    const json cert = j.contains("certificate") ? j.at("certificate") : j;
    const Certificate c = certificate_from_json(cert);
    out << std::setprecision(10);
    out << "practical exponential stability certificate\n"
        << "  |phi(t) - x*| <= K e^{-lambda t} |x0 - x*| + c\n"
        << "  lambda      " << c.lambda << '\n'
        << "  K           " << c.k_gain << '\n'
        << "  c (=delta)  " << c.c << '\n'
        << "  alpha       " << c.alpha << '\n'
        << "  tau         " << c.tau << "  (core " << c.core_tau << ")\n"
        << "  L           " << c.lipschitz << "  (core " << c.core_lipschitz << ")\n"
        << "  F           " << c.speed_bound << '\n'
        << "  eps         " << c.eps << '\n'
        << "  covered     " << (c.covered ? "yes" : "no");
    if (!c.covered) out << "  (" << c.uncovered_samples << " uncovered samples)";
    out << '\n';
    if (j.contains("assignments")) {
      const AssignmentSet set = assignments_from_json(j.at("assignments"));
      int boot = 0;
      for (const Triple& t : set.triples) boot += t.origin == CellOrigin::kBootstrap;
      out << "  cells       " << set.size() << "  (" << boot << " bootstrapped)\n"
          << "  signals     " << set.alphabet.size() << '\n'
          << "  model       " << set.model_id << '\n';
    }
    return consistent(c) ? kExitOk : kExitPartial;
  });
}

}  // namespace ncp
