#include <iostream>

#include <CLI11.hpp>

#include "ncp/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Nonparametric chain policies: synthesize, refine, expand and simulate"};
  app.require_subcommand(1);

  ncp::CommonOptions common;
  std::uint64_t seed = 0;
  std::string config;
  std::string assignments;
  std::string region;
  ncp::SimulateOptions simulate;
  double horizon = 0.0;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out-dir", common.out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--seed", seed, "Override the configured seed");
    cmd->add_option("--threads", common.threads, "Worker threads (default: NCP_THREADS or 1)");
  };

  auto* synth = app.add_subcommand("synth", "Synthesize and certify a chain policy");
  synth->add_option("--config", config, "Run configuration (JSON)")->required();
  add_common(synth);

  auto* sim = app.add_subcommand("simulate", "Roll out a stored policy and check the envelope");
  sim->add_option("--assignments", assignments, "Policy artifact (assignments.json)")->required();
  sim->add_option("--starts", simulate.starts_path, "CSV of start states");
  sim->add_option("--grid-starts", simulate.grid_starts, "Evenly spaced boundary starts");
  sim->add_option("--random-starts", simulate.random_starts, "Uniform random starts");
  sim->add_option("--horizon", horizon, "Rollout horizon");
  add_common(sim);

  auto* ref = app.add_subcommand("refine", "Split every cell once and re-verify");
  ref->add_option("--assignments", assignments)->required();
  ref->add_option("--config", config)->required();
  add_common(ref);

  auto* exp = app.add_subcommand("expand", "Certify an additional region without changing the old one");
  exp->add_option("--assignments", assignments)->required();
  exp->add_option("--config", config)->required();
  exp->add_option("--region", region, "Region JSON, e.g. {\"kind\":\"box\",\"lower\":[..],\"upper\":[..]}");
  add_common(exp);

  auto* rep = app.add_subcommand("report", "Print a stored certificate");
  rep->add_option("path", assignments, "assignments.json or certificate.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Usage errors share the error exit code; --help still exits 0.
    return app.exit(e) == 0 ? ncp::kExitOk : ncp::kExitError;
  }

  for (auto* cmd : {synth, sim, ref, exp})
    if (cmd->parsed() && cmd->count("--seed") > 0) common.seed = seed;
  if (sim->parsed() && sim->count("--horizon") > 0) simulate.horizon = horizon;

  if (synth->parsed()) return ncp::cmd_synth(config, common, std::cout, std::cerr);
  if (sim->parsed())
    return ncp::cmd_simulate(assignments, simulate, common, std::cout, std::cerr);
  if (ref->parsed()) return ncp::cmd_refine(assignments, config, common, std::cout, std::cerr);
  if (exp->parsed())
    return ncp::cmd_expand(assignments, config, region, common, std::cout, std::cerr);
  return ncp::cmd_report(assignments, std::cout, std::cerr);
}
