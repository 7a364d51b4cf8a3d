#include "idgame/harness.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace idgame {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string_view source_name(PopulationSource source) {
  switch (source) {
    case PopulationSource::Generator: return "generator";
    case PopulationSource::NetworkFiles: return "files";
    case PopulationSource::WellMixed: return "well_mixed";
  }
  return "generator";
}

PopulationSource parse_source(const std::string& name) {
  if (name == "generator") return PopulationSource::Generator;
  if (name == "files") return PopulationSource::NetworkFiles;
  if (name == "well_mixed") return PopulationSource::WellMixed;
  throw std::invalid_argument("population must be generator, files or well_mixed, not '" + name + "'");
}

std::string_view mode_name(SearchMode mode) {
  return mode == SearchMode::SequentialScan ? "sequential" : "random";
}

SearchMode parse_mode(const std::string& name) {
  if (name == "sequential") return SearchMode::SequentialScan;
  if (name == "random") return SearchMode::RandomCandidate;
  throw std::invalid_argument("search_mode must be sequential or random, not '" + name + "'");
}

void reject_unknown(const json& section, std::string_view where, std::initializer_list<std::string_view> keys) {
  if (!section.is_object()) throw std::invalid_argument(std::string(where) + " must be an object");
  for (const auto& [key, value] : section.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw std::invalid_argument("unknown key '" + key + "' in " + std::string(where));
    }
  }
}

template <class T>
void read_key(const json& section, const char* key, T& out) {
  if (section.contains(key)) {
    try {
      out = section.at(key).get<T>();
    } catch (const json::exception& e) {
      throw std::invalid_argument(std::string("bad value for '") + key + "': " + e.what());
    }
  }
}

Rational read_rational(const json& value) {
  if (value.is_string()) return Rational::parse(value.get<std::string>());
  if (value.is_number_integer()) return Rational(value.get<std::int64_t>());
  if (value.is_number()) return Rational::parse(value.dump());
  throw std::invalid_argument("expected a rational such as \"3/2\"");
}

}  // namespace

void ExperimentSpec::validate() const {
  game.validate();
  dynamics.validate();
  if (population == PopulationSource::NetworkFiles) {
    if (network_files.empty()) throw std::invalid_argument("population 'files' needs a nonempty network_files list");
  } else if (!network_files.empty()) {
    throw std::invalid_argument("network_files given but population is '" + std::string(source_name(population)) + "'");
  }
  if (population == PopulationSource::WellMixed && symmetrize) {
    throw std::invalid_argument("symmetrize applies only to networked populations");
  }
  if (population == PopulationSource::Generator) {
    GeneratorParams g = generator;
    g.n_nodes = game.n_agents;
    g.validate();
  }
  if (population != PopulationSource::NetworkFiles && campaign.n_networks == 0) {
    throw std::invalid_argument("n_networks must be positive");
  }
  if (campaign.trials_per_network == 0) throw std::invalid_argument("trials_per_network must be positive");
  if (!campaign.master_seed) throw std::invalid_argument("master_seed is required (set it in the spec or pass --seed)");
}

ordered_json ExperimentSpec::to_json() const {
  ordered_json j;
  j["name"] = name;
  j["game"] = {{"n_agents", game.n_agents},
               {"dims", game.dims},
               {"lo", game.lo},
               {"hi", game.hi},
               {"lambda", game.lambda.str()}};
  j["population"] = source_name(population);
  j["symmetrize"] = symmetrize;
  j["network_files"] = network_files;
  j["generator"] = {{"max_out_degree", generator.max_out_degree},
                    {"n_iterations", generator.n_iterations},
                    {"pairs_per_iter", generator.pairs_per_iter},
                    {"triad_attempts_per_iter", generator.triad_attempts_per_iter},
                    {"break_fraction", generator.break_fraction.str()}};
  j["dynamics"] = {{"search_mode", mode_name(dynamics.search_mode)},
                   {"max_steps", dynamics.max_steps},
                   {"check_interval", dynamics.check_interval},
                   {"trajectory_sample_interval", dynamics.trajectory_sample_interval},
                   {"trajectory_sample_offset", dynamics.trajectory_sample_offset}};
  j["campaign"] = {{"n_networks", campaign.n_networks}, {"trials_per_network", campaign.trials_per_network}};
  if (campaign.master_seed) {
    j["campaign"]["master_seed"] = *campaign.master_seed;
  } else {
    j["campaign"]["master_seed"] = nullptr;
  }
  j["outputs"] = {{"dir", outputs.dir},
                  {"records", outputs.records},
                  {"stats", outputs.stats},
                  {"histogram", outputs.histogram},
                  {"trajectories", outputs.trajectories},
                  {"networks", outputs.networks}};
  return j;
}

ExperimentSpec ExperimentSpec::from_json(const json& j) { return from_json(j, ExperimentSpec{}); }

ExperimentSpec ExperimentSpec::from_json(const json& j, ExperimentSpec base) {
  ExperimentSpec s = std::move(base);
  reject_unknown(j, "spec",
                 {"name", "preset", "game", "population", "symmetrize", "network_files", "generator", "dynamics",
                  "campaign", "outputs"});
  read_key(j, "name", s.name);
  if (j.contains("game")) {
    const auto& g = j["game"];
    reject_unknown(g, "game", {"n_agents", "dims", "lo", "hi", "lambda"});
    read_key(g, "n_agents", s.game.n_agents);
    read_key(g, "dims", s.game.dims);
    read_key(g, "lo", s.game.lo);
    read_key(g, "hi", s.game.hi);
    if (g.contains("lambda")) s.game.lambda = read_rational(g["lambda"]);
  }
  if (j.contains("population")) s.population = parse_source(j["population"].get<std::string>());
  read_key(j, "symmetrize", s.symmetrize);
  read_key(j, "network_files", s.network_files);
  if (j.contains("generator")) {
    const auto& g = j["generator"];
    reject_unknown(g, "generator",
                   {"max_out_degree", "n_iterations", "pairs_per_iter", "triad_attempts_per_iter", "break_fraction"});
    read_key(g, "max_out_degree", s.generator.max_out_degree);
    read_key(g, "n_iterations", s.generator.n_iterations);
    read_key(g, "pairs_per_iter", s.generator.pairs_per_iter);
    read_key(g, "triad_attempts_per_iter", s.generator.triad_attempts_per_iter);
    if (g.contains("break_fraction")) s.generator.break_fraction = read_rational(g["break_fraction"]);
  }
  if (j.contains("dynamics")) {
    const auto& d = j["dynamics"];
    reject_unknown(d, "dynamics",
                   {"search_mode", "max_steps", "check_interval", "trajectory_sample_interval", "trajectory_sample_offset"});
    if (d.contains("search_mode")) s.dynamics.search_mode = parse_mode(d["search_mode"].get<std::string>());
    read_key(d, "max_steps", s.dynamics.max_steps);
    read_key(d, "check_interval", s.dynamics.check_interval);
    read_key(d, "trajectory_sample_interval", s.dynamics.trajectory_sample_interval);
    read_key(d, "trajectory_sample_offset", s.dynamics.trajectory_sample_offset);
  }
  if (j.contains("campaign")) {
    const auto& c = j["campaign"];
    reject_unknown(c, "campaign", {"n_networks", "trials_per_network", "master_seed"});
    read_key(c, "n_networks", s.campaign.n_networks);
    read_key(c, "trials_per_network", s.campaign.trials_per_network);
    if (c.contains("master_seed")) {
      if (c["master_seed"].is_null()) {
        s.campaign.master_seed.reset();
      } else {
        s.campaign.master_seed = c["master_seed"].get<std::uint64_t>();
      }
    }
  }
  if (j.contains("outputs")) {
    const auto& o = j["outputs"];
    reject_unknown(o, "outputs", {"dir", "records", "stats", "histogram", "trajectories", "networks"});
    read_key(o, "dir", s.outputs.dir);
    read_key(o, "records", s.outputs.records);
    read_key(o, "stats", s.outputs.stats);
    read_key(o, "histogram", s.outputs.histogram);
    read_key(o, "trajectories", s.outputs.trajectories);
    read_key(o, "networks", s.outputs.networks);
  }
  return s;
}

ExperimentSpec preset(std::string_view name) {
  ExperimentSpec s;
  s.name = std::string(name);
  s.campaign.master_seed = 1;
  if (name == "paper-full") {
    s.campaign.n_networks = 100;
    s.campaign.trials_per_network = 100;
  } else if (name == "paper-desk") {
    s.campaign.n_networks = 10;
    s.campaign.trials_per_network = 10;
  } else if (name == "paper-desk-undirected") {
    s.campaign.n_networks = 10;
    s.campaign.trials_per_network = 10;
    s.symmetrize = true;
  } else if (name == "well-mixed") {
    s.population = PopulationSource::WellMixed;
    s.campaign.n_networks = 1;
    s.campaign.trials_per_network = 100;
    s.outputs.networks = false;
  } else if (name == "fig2") {
    s.campaign.n_networks = 1;
    s.campaign.trials_per_network = 1;
    s.dynamics.trajectory_sample_interval = 200;
    s.dynamics.trajectory_sample_offset = 100;
    s.outputs.trajectories = true;
  } else if (name == "smoke") {
    s.campaign.n_networks = 2;
    s.campaign.trials_per_network = 2;
    s.dynamics.max_steps = 2000;
  } else {
    std::string known;
    for (const auto& p : preset_names()) known += " " + p;
    throw std::invalid_argument("unknown preset '" + std::string(name) + "'; known:" + known);
  }
  return s;
}

std::vector<std::string> preset_names() {
  return {"paper-full", "paper-desk", "paper-desk-undirected", "well-mixed", "fig2", "smoke"};
}

std::uint64_t network_seed(std::uint64_t master_seed, std::size_t index) {
  return derive_seed(master_seed ^ kNetworkStream, index);
}

namespace {

struct Population {
  std::vector<DirectedNetwork> networks;  // empty when well-mixed
  std::vector<std::uint64_t> seeds;
};

Population load_networks(const ExperimentSpec& spec) {
  Population pop;
  if (spec.population == PopulationSource::Generator) {
    for (std::size_t k = 0; k < spec.campaign.n_networks; ++k) {
      GeneratorParams g = spec.generator;
      g.n_nodes = spec.game.n_agents;
      g.rng_seed = network_seed(*spec.campaign.master_seed, k);
      pop.networks.push_back(generate_network(g));
      pop.seeds.push_back(g.rng_seed);
    }
  } else if (spec.population == PopulationSource::NetworkFiles) {
    for (const auto& path : spec.network_files) pop.networks.push_back(read_network_file(path));
  }
  if (spec.symmetrize) {
    for (auto& net : pop.networks) net = symmetrize(net);
  }
  return pop;
}

std::string indexed_name(std::string_view stem, std::size_t index, std::string_view ext) {
  std::ostringstream os;
  os << stem << std::setw(3) << std::setfill('0') << index << ext;
  return os.str();
}

ordered_json network_summary(const Population& pop) {
  ordered_json list = ordered_json::array();
  for (std::size_t k = 0; k < pop.networks.size(); ++k) {
    const auto& net = pop.networks[k];
    ordered_json entry = {{"id", k}, {"nodes", net.n_nodes()}, {"edges", net.n_edges()},
                          {"isolated_nodes", net.isolated_nodes()}};
    if (k < pop.seeds.size()) entry["seed"] = pop.seeds[k];
    list.push_back(std::move(entry));
  }
  return list;
}

void log_isolated(const Population& pop, std::ostream& log) {
  for (std::size_t k = 0; k < pop.networks.size(); ++k) {
    const auto iso = pop.networks[k].isolated_nodes();
    if (!iso.empty()) log << "network " << k << ": " << iso.size() << " isolated node(s) frozen\n";
  }
}

std::vector<Environment> environments(const ExperimentSpec& spec, const Population& pop) {
  std::vector<Environment> envs;
  if (spec.population == PopulationSource::WellMixed) {
    for (std::size_t k = 0; k < spec.campaign.n_networks; ++k) envs.push_back(Environment::well_mixed(spec.game));
  } else {
    for (const auto& net : pop.networks) envs.push_back(Environment::networked(spec.game, net));
  }
  return envs;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir);
}

}  // namespace

std::vector<Environment> build_populations(const ExperimentSpec& spec) {
  spec.validate();
  return environments(spec, load_networks(spec));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

void cmd_generate(const ExperimentSpec& spec, std::ostream& log) {
  spec.validate();
  if (spec.population != PopulationSource::Generator) throw std::invalid_argument("generate needs population 'generator'");
  const Population pop = load_networks(spec);
  ensure_dir(spec.outputs.dir);
  for (std::size_t k = 0; k < pop.networks.size(); ++k) {
    write_network_file(pop.networks[k], (fs::path(spec.outputs.dir) / indexed_name("network_", k, ".txt")).string());
  }
  ordered_json manifest;
  manifest["command"] = "generate";
  manifest["spec"] = spec.to_json();
  manifest["networks"] = network_summary(pop);
  write_text_file((fs::path(spec.outputs.dir) / "manifest.json").string(), manifest.dump(2) + "\n");
  log_isolated(pop, log);
  log << "wrote " << pop.networks.size() << " network(s) to " << spec.outputs.dir << "\n";
}

RunResult cmd_run(const ExperimentSpec& spec, std::size_t workers, std::ostream& log) {
  spec.validate();
  for (const auto& w : spec.game.warnings()) log << "warning: " << w << "\n";
  const Population pop = load_networks(spec);
  log_isolated(pop, log);
  const auto envs = environments(spec, pop);

  DynamicsConfig dyn = spec.dynamics;
  RunResult result;
  result.records = run_campaign(envs, spec.campaign.trials_per_network, dyn, *spec.campaign.master_seed, workers);
  result.stats = aggregate(result.records);

  const fs::path out(spec.outputs.dir);
  ensure_dir(spec.outputs.dir);
  if (spec.outputs.records) write_text_file((out / "records.csv").string(), records_csv(result.records));
  if (spec.outputs.stats) {
    write_text_file((out / "network_stats.csv").string(), network_stats_csv(result.stats));
    write_text_file((out / "stats.json").string(), stats_json(result.stats));
  }
  if (spec.outputs.histogram) write_text_file((out / "histogram.csv").string(), histogram_csv(result.stats));
  if (spec.outputs.networks && !pop.networks.empty()) {
    ensure_dir((out / "networks").string());
    for (std::size_t k = 0; k < pop.networks.size(); ++k) {
      write_network_file(pop.networks[k], (out / "networks" / indexed_name("network_", k, ".txt")).string());
    }
  }
  if (spec.outputs.trajectories && spec.dynamics.trajectory_sample_interval > 0) {
    ensure_dir((out / "trajectories").string());
    for (const auto& rec : result.records) {
      const std::string stem = indexed_name("network_", rec.network_id, "") + indexed_name("_trial_", rec.trial_id, "");
      write_text_file((out / "trajectories" / (stem + ".csv")).string(), trajectory_csv(rec.samples));
      write_text_file((out / "trajectories" / (stem + "_popularity.csv")).string(),
                      popularity_csv(popularity_series(rec.samples)));
    }
  }
  ordered_json manifest;
  manifest["command"] = "run";
  manifest["spec"] = spec.to_json();
  manifest["networks"] = network_summary(pop);
  write_text_file((out / "manifest.json").string(), manifest.dump(2) + "\n");

  log << result.stats.trials << " trial(s), " << result.stats.non_convergent << " non-convergent ("
      << result.stats.non_convergence_rate.str() << ")\n";
  return result;
}

namespace {

class VerifyReport {
 public:
  explicit VerifyReport(std::ostream& out) : out_(out) {}
  void pass(std::string_view name, const std::string& detail) { line("PASS", name, detail); }
  void fail(std::string_view name, const std::string& detail) {
    ok_ = false;
    line("FAIL", name, detail);
  }
  void check(bool passed, std::string_view name, const std::string& detail) {
    passed ? pass(name, detail) : fail(name, detail);
  }
  void skip(std::string_view name, const std::string& detail) { line("SKIP", name, detail); }
  [[nodiscard]] bool ok() const { return ok_; }

 private:
  void line(std::string_view tag, std::string_view name, const std::string& detail) {
    out_ << tag << "  " << name << ": " << detail << "\n";
  }
  std::ostream& out_;
  bool ok_ = true;
};

template <class Fn>
void guarded(VerifyReport& report, std::string_view name, Fn&& fn) {
  try {
    fn();
  } catch (const EnumerationBudgetExceeded& e) {
    report.skip(name, e.what());
  } catch (const std::exception& e) {
    report.fail(name, std::string("error: ") + e.what());
  }
}

}  // namespace

bool cmd_verify(std::uint64_t seed, std::ostream& out) {
  VerifyReport report(out);
  const GameConfig default_game;  // N=100, d=1, {0..199}, lambda=3/2

  for (std::size_t dims : {1, 2}) {
    const std::string name = "exact-potential-d" + std::to_string(dims);
    guarded(report, name, [&] {
      GameConfig g{10, dims, 0, 5, Rational(3, 2)};
      const auto r = verify_exact_potential(g, 1000, derive_seed(seed, 1, dims));
      std::string detail = std::to_string(r.samples) + " samples, " + std::to_string(r.violations.size()) + " violations";
      if (!r.passed()) {
        const auto& v = r.violations.front();
        detail += "; first: agent " + std::to_string(v.agent) + " -> " + v.deviation.str() + " dPhi=" +
                  v.potential_change.str() + " du=" + v.utility_change.str();
      }
      report.check(r.passed(), name, detail);
    });
  }

  for (SearchMode mode : {SearchMode::SequentialScan, SearchMode::RandomCandidate}) {
    const std::string name = std::string("potential-monotonicity-") + std::string(mode_name(mode));
    guarded(report, name, [&] {
      GameConfig g{20, 1, 0, 15, Rational(3, 2)};
      const Environment env = Environment::well_mixed(g);
      DynamicsConfig dyn;
      dyn.search_mode = mode;
      dyn.max_steps = 4000;
      dyn.log_revisions = true;
      dyn.rng_seed = derive_seed(seed, 2, static_cast<std::uint64_t>(mode));
      const auto rec = run_trial(std::nullopt, env, dyn);
      const auto audit = audit_potential_trajectory(rec, env);
      std::string detail = std::to_string(audit.revisions) + " revisions, " + std::to_string(audit.failures.size()) +
                           " failures";
      if (!audit.passed()) detail += "; first: " + audit.failures.front();
      report.check(audit.passed() && audit.revisions > 0, name, detail);
    });
  }

  guarded(report, "three-cycle-no-pure-nash", [&] {
    const Environment env = Environment::networked({3, 1, 0, 3, Rational(3, 2)}, three_cycle());
    const auto ne = enumerate_pure_nash(env);
    report.check(ne.empty(), "three-cycle-no-pure-nash", std::to_string(ne.size()) + " pure NE found");
  });

  guarded(report, "zero-lambda-homogeneous", [&] {
    const Environment env = Environment::networked({3, 1, 0, 1, Rational(0)}, three_cycle());
    const auto ne = enumerate_pure_nash(env);
    const bool zeros = std::find(ne.begin(), ne.end(), Profile::scalar({0, 0, 0})) != ne.end();
    const bool ones = std::find(ne.begin(), ne.end(), Profile::scalar({1, 1, 1})) != ne.end();
    report.check(zeros && ones, "zero-lambda-homogeneous", std::to_string(ne.size()) + " pure NE, both homogeneous present: " +
                                                               (zeros && ones ? "yes" : "no"));
  });

  guarded(report, "enumeration-consistency", [&] {
    DirectedNetwork net(3);
    net.add_edge(0, 1);
    net.add_edge(1, 0);
    net.add_edge(1, 2);
    net.add_edge(2, 1);
    const Environment env = Environment::networked({3, 1, 0, 3, Rational(3, 2)}, net);
    const auto ne = enumerate_pure_nash(env);
    std::size_t disagreements = 0;
    for (const auto& p : ne) {
      for (AgentId i = 0; i < p.n_agents(); ++i) {
        if (!better_replies(p, i, env).empty()) ++disagreements;
      }
    }
    report.check(disagreements == 0 && !ne.empty(), "enumeration-consistency",
                 std::to_string(ne.size()) + " NE on the bidirected path, " + std::to_string(disagreements) +
                     " with a better reply");
  });

  guarded(report, "generator-invariants", [&] {
    std::size_t bad = 0;
    const std::size_t count = 20;
    for (std::size_t k = 0; k < count; ++k) {
      GeneratorParams g;
      g.rng_seed = network_seed(seed, k);
      const auto net = generate_network(g);
      const auto text = write_network(net);
      const auto reread = read_network(text);  // rejects self-loops and duplicates
      bool ok = reread == net && net.n_nodes() == g.n_nodes && write_network(generate_network(g)) == text;
      for (NodeId v = 0; v < net.n_nodes(); ++v) ok = ok && net.out_degree(v) <= g.max_out_degree;
      if (!ok) ++bad;
    }
    report.check(bad == 0, "generator-invariants", std::to_string(count) + " networks, " + std::to_string(bad) + " invalid");
  });

  guarded(report, "well-mixed-convergence", [&] {
    const Environment env = Environment::well_mixed(default_game);
    DynamicsConfig dyn;
    dyn.rng_seed = derive_seed(seed, 3);
    const auto rec = run_trial(std::nullopt, env, dyn);
    report.check(rec.converged && is_pure_nash(rec.final_profile, env), "well-mixed-convergence",
                 rec.converged ? "converged at step " + std::to_string(rec.steps_elapsed) : "did not converge");
  });

  return report.ok();
}

std::string snapshot_dot(const DirectedNetwork& network, const Profile& profile, Coord shade_lo, Coord shade_hi) {
  if (profile.n_agents() != network.n_nodes()) throw std::invalid_argument("profile and network sizes differ");
  std::vector<std::int64_t> values(profile.n_agents());
  std::vector<std::string> labels(profile.n_agents());
  for (AgentId i = 0; i < profile.n_agents(); ++i) {
    values[i] = profile[i][0];
    labels[i] = profile.dims() == 1 ? std::to_string(profile[i][0]) : profile.identity(i).str();
  }
  return write_dot(network, values, shade_lo, shade_hi, labels);
}

std::vector<std::string> cmd_snapshot(const std::string& trajectory_path, const std::string& network_path,
                                      std::span<const std::uint64_t> steps, const std::string& out_dir) {
  std::vector<std::string> written;
  if (steps.empty()) return written;
  const auto samples = read_trajectory_csv(read_text_file(trajectory_path));
  const auto network = read_network_file(network_path);

  std::vector<const ProfileSample*> chosen;
  for (auto step : steps) {
    auto it = std::find_if(samples.begin(), samples.end(), [&](const ProfileSample& s) { return s.step == step; });
    if (it == samples.end()) {
      std::string available;
      for (const auto& s : samples) available += (available.empty() ? "" : ",") + std::to_string(s.step);
      throw std::invalid_argument("step " + std::to_string(step) + " was not sampled; available steps: " + available);
    }
    chosen.push_back(&*it);
  }
  Coord lo = std::numeric_limits<Coord>::max();
  Coord hi = std::numeric_limits<Coord>::min();
  for (const auto* s : chosen) {
    for (AgentId i = 0; i < s->profile.n_agents(); ++i) {
      lo = std::min(lo, s->profile[i][0]);
      hi = std::max(hi, s->profile[i][0]);
    }
  }
  ensure_dir(out_dir);
  for (const auto* s : chosen) {
    const std::string path = (fs::path(out_dir) / ("snapshot_" + std::to_string(s->step) + ".dot")).string();
    write_text_file(path, snapshot_dot(network, s->profile, lo, hi));
    written.push_back(path);
  }
  return written;
}

}  // namespace idgame
