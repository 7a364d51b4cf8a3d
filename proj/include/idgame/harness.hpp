#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "idgame/analysis.hpp"
#include "idgame/dynamics.hpp"
#include "idgame/model.hpp"
#include "idgame/network.hpp"

namespace idgame {

enum class PopulationSource { Generator, NetworkFiles, WellMixed };

struct CampaignParams {
  std::size_t n_networks = 10;
  std::size_t trials_per_network = 10;
  std::optional<std::uint64_t> master_seed;
};

struct OutputSelection {
  std::string dir = "out";
  bool records = true;
  bool stats = true;
  bool histogram = true;
  bool trajectories = false;
  bool networks = true;  ///< write the networks actually simulated
};

/// One declarative experiment. Everything that influences results is
/// echoed into the output manifest.
struct ExperimentSpec {
  std::string name = "custom";
  GameConfig game;
  PopulationSource population = PopulationSource::Generator;
  GeneratorParams generator;  ///< n_nodes follows game.n_agents; rng_seed is derived per network
  std::vector<std::string> network_files;
  bool symmetrize = false;
  DynamicsConfig dynamics;  ///< rng_seed is derived per trial
  CampaignParams campaign;
  OutputSelection outputs;

  /// Throws std::invalid_argument describing the first problem found.
  void validate() const;
  [[nodiscard]] nlohmann::ordered_json to_json() const;
  /// Applies the keys present in `j` on top of `base`. Unknown keys are errors.
  static ExperimentSpec from_json(const nlohmann::json& j, ExperimentSpec base);
  static ExperimentSpec from_json(const nlohmann::json& j);
};

/// Built-in experiments: "paper-full", "paper-desk", "paper-desk-undirected",
/// "well-mixed", "fig2", "smoke".
ExperimentSpec preset(std::string_view name);
std::vector<std::string> preset_names();

/// Seed used to grow network `index` of a campaign.
std::uint64_t network_seed(std::uint64_t master_seed, std::size_t index);

/// The simulated populations of a spec (generated, loaded, or well-mixed
/// replicas), after optional symmetrization.
std::vector<Environment> build_populations(const ExperimentSpec& spec);

struct RunResult {
  std::vector<TrialRecord> records;
  CampaignStats stats;
};

/// Writes network_NNN.txt for each generated network plus manifest.json.
void cmd_generate(const ExperimentSpec& spec, std::ostream& log);

/// Runs the campaign and writes records.csv, network_stats.csv, stats.json,
/// histogram.csv, manifest.json and the optional trajectories/networks.
RunResult cmd_run(const ExperimentSpec& spec, std::size_t workers, std::ostream& log);

/// Runs the built-in oracles, printing one PASS/FAIL/SKIP line each.
/// Returns true when nothing failed.
bool cmd_verify(std::uint64_t seed, std::ostream& out);

/// Writes snapshot_<step>.dot for each requested step, shading nodes over
/// the identity range observed across all requested steps. Throws
/// std::invalid_argument listing the sampled steps if one is missing.
std::vector<std::string> cmd_snapshot(const std::string& trajectory_path, const std::string& network_path,
                                      std::span<const std::uint64_t> steps, const std::string& out_dir);

/// DOT text for one profile on one network.
std::string snapshot_dot(const DirectedNetwork& network, const Profile& profile, Coord shade_lo, Coord shade_hi);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace idgame
