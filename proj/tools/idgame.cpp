// idgame: experiment driver for the conformity/uniqueness identity game.
//
//   idgame generate --preset paper-desk --out nets/
//   idgame run      --preset paper-desk --workers 4
//   idgame verify
//   idgame snapshot --trajectory t.csv --network n.txt --steps 29100,29300
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "idgame/harness.hpp"

namespace {

struct CommonOptions {
  std::string spec_path;
  std::string preset_name;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--spec", opts.spec_path, "Experiment spec (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--preset", opts.preset_name, "Built-in experiment to start from");
  cmd->add_option("--seed", opts.seed, "Master seed (overrides the spec)");
  cmd->add_option("--out", opts.out, "Output directory (overrides IDGAME_OUT_DIR and the spec)");
  cmd->add_option("--workers", opts.workers, "Concurrent trials")->check(CLI::PositiveNumber);
}

idgame::ExperimentSpec resolve_spec(const CommonOptions& opts) {
  nlohmann::json file_spec = nlohmann::json::object();
  if (!opts.spec_path.empty()) {
    try {
      file_spec = nlohmann::json::parse(idgame::read_text_file(opts.spec_path));
    } catch (const nlohmann::json::parse_error& e) {
      throw std::invalid_argument(opts.spec_path + ": " + e.what());
    }
  }
  std::string preset_name = opts.preset_name;
  if (preset_name.empty() && file_spec.contains("preset")) preset_name = file_spec["preset"].get<std::string>();
  idgame::ExperimentSpec base;
  if (!preset_name.empty()) base = idgame::preset(preset_name);
  auto spec = idgame::ExperimentSpec::from_json(file_spec, std::move(base));
  if (opts.seed) spec.campaign.master_seed = *opts.seed;
  if (const char* env_out = std::getenv("IDGAME_OUT_DIR"); env_out != nullptr && *env_out != '\0') {
    spec.outputs.dir = env_out;
  }
  if (opts.out) spec.outputs.dir = *opts.out;
  spec.validate();
  return spec;
}

std::vector<std::uint64_t> parse_steps(const std::string& list) {
  std::vector<std::uint64_t> steps;
  std::size_t pos = 0;
  while (pos < list.size()) {
    const auto comma = list.find(',', pos);
    const auto token = list.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!token.empty()) steps.push_back(std::stoull(token));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return steps;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformity/uniqueness identity game: networks, better-reply dynamics, oracles"};
  app.require_subcommand(1);

  CommonOptions gen_opts;
  auto* gen = app.add_subcommand("generate", "Grow directed networks and write edge-list files");
  add_common(gen, gen_opts);

  CommonOptions run_opts;
  auto* run = app.add_subcommand("run", "Run a better-reply campaign and write records and statistics");
  add_common(run, run_opts);

  std::uint64_t verify_seed = 1;
  auto* verify = app.add_subcommand("verify", "Run the built-in oracles");
  verify->add_option("--seed", verify_seed, "Seed for the randomized oracles");

  std::string trajectory_path;
  std::string network_path;
  std::string steps_list;
  std::optional<std::string> snapshot_out;
  auto* snapshot = app.add_subcommand("snapshot", "Render sampled profiles as Graphviz DOT files");
  snapshot->add_option("--trajectory", trajectory_path, "Trajectory CSV written by run")->required()->check(CLI::ExistingFile);
  snapshot->add_option("--network", network_path, "Edge-list file of the simulated network")->required()->check(CLI::ExistingFile);
  snapshot->add_option("--steps", steps_list, "Comma-separated sampled steps");
  snapshot->add_option("--out", snapshot_out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      idgame::cmd_generate(resolve_spec(gen_opts), std::cerr);
    } else if (run->parsed()) {
      const auto spec = resolve_spec(run_opts);
      idgame::cmd_run(spec, run_opts.workers, std::cerr);
      std::cerr << "outputs in " << spec.outputs.dir << "\n";
    } else if (verify->parsed()) {
      return idgame::cmd_verify(verify_seed, std::cout) ? 0 : 1;
    } else if (snapshot->parsed()) {
      std::string out_dir = "snapshots";
      if (const char* env_out = std::getenv("IDGAME_OUT_DIR"); env_out != nullptr && *env_out != '\0') out_dir = env_out;
      if (snapshot_out) out_dir = *snapshot_out;
      for (const auto& path : idgame::cmd_snapshot(trajectory_path, network_path, parse_steps(steps_list), out_dir)) {
        std::cout << path << "\n";
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
