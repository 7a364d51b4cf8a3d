#include "idgame/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace idgame {

Rational potential(const Profile& profile, const GameConfig& config) {
  const std::size_t n = profile.n_agents();
  if (n < 2) throw std::domain_error("potential needs at least 2 agents");
  std::vector<AgentId> everyone(n);
  for (AgentId j = 0; j < n; ++j) everyone[j] = j;
  const auto mean = mean_identity(profile, everyone);

  Rational conformity;
  std::int64_t coincidences = 0;
  for (AgentId i = 0; i < n; ++i) {
    const auto x = profile[i];
    for (std::size_t k = 0; k < x.size(); ++k) {
      const Rational diff = Rational(x[k]) - mean[k];
      conformity += diff * diff;
    }
    coincidences += static_cast<std::int64_t>(same_count(profile, i, everyone));
  }
  const auto nn = static_cast<std::int64_t>(n);
  return -(Rational(nn - 1, nn) * conformity + Rational(1, 2) * config.lambda * Rational(coincidences));
}

Rational potential(const Profile& profile, const Environment& env) {
  if (!env.is_well_mixed()) throw std::domain_error("the potential is defined only for the well-mixed game");
  return potential(profile, env.config());
}

PotentialReport verify_exact_potential(const GameConfig& config, std::size_t n_samples, std::uint64_t rng_seed) {
  config.validate();
  const Domain domain = config.domain();
  Rng rng(rng_seed);
  PotentialReport report;
  for (std::size_t s = 0; s < n_samples; ++s) {
    Profile before = random_profile(config, rng);
    const auto agent = static_cast<AgentId>(rng.below(config.n_agents));
    const Identity deviation = domain.at(rng.below(domain.size()));
    Profile after = before;
    after.set(agent, deviation);

    const Rational dphi = potential(after, config) - potential(before, config);
    const Rational du = utility_wellmixed(after, agent, config) - utility_wellmixed(before, agent, config);
    ++report.samples;
    if (dphi != du) report.violations.push_back({std::move(before), agent, deviation, dphi, du});
  }
  return report;
}

TrajectoryAudit audit_potential_trajectory(const TrialRecord& record, const Environment& env) {
  TrajectoryAudit audit;
  Profile profile = record.initial_profile;
  Rational phi = potential(profile, env);
  for (const Revision& rev : record.revisions) {
    const Rational u_before = utility(profile, rev.agent, env);
    profile.set(rev.agent, rev.to);
    const Rational u_after = utility(profile, rev.agent, env);
    const Rational next_phi = potential(profile, env);
    ++audit.revisions;
    const Rational gain = next_phi - phi;
    if (!(gain > Rational(0)) || gain != u_after - u_before) {
      audit.failures.push_back("step " + std::to_string(rev.step) + " agent " + std::to_string(rev.agent) + " " +
                               rev.from.str() + "->" + rev.to.str() + ": potential change " + gain.str() +
                               ", utility change " + (u_after - u_before).str());
    }
    phi = next_phi;
  }
  if (profile != record.final_profile && record.revisions.size() > 0) {
    audit.failures.push_back("revision log does not reproduce the final profile");
  }
  return audit;
}

EnumerationBudgetExceeded::EnumerationBudgetExceeded(std::uint64_t required, std::uint64_t budget)
    : std::runtime_error(required == 0 ? "profile space exceeds 2^64 profiles (budget " + std::to_string(budget) + ")"
                                       : "profile space has " + std::to_string(required) + " profiles, budget is " +
                                             std::to_string(budget)),
      required_(required),
      budget_(budget) {}

std::optional<std::uint64_t> profile_space_size(const GameConfig& config) {
  const std::uint64_t per_agent = config.domain().size();
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < config.n_agents; ++i) {
    if (total > std::numeric_limits<std::uint64_t>::max() / per_agent) return std::nullopt;
    total *= per_agent;
  }
  return total;
}

std::vector<Profile> enumerate_pure_nash(const Environment& env, std::uint64_t budget) {
  const auto& cfg = env.config();
  const auto space = profile_space_size(cfg);
  if (!space || *space > budget) throw EnumerationBudgetExceeded(space.value_or(0), budget);

  const Domain domain = cfg.domain();
  std::vector<std::uint64_t> digits(cfg.n_agents, 0);
  Profile profile(cfg.n_agents, cfg.dims);
  std::vector<Coord> x(cfg.dims);
  domain.decode(0, x);
  for (AgentId i = 0; i < cfg.n_agents; ++i) profile.set(i, x);

  std::vector<Profile> equilibria;
  for (std::uint64_t p = 0; p < *space; ++p) {
    if (is_pure_nash(profile, env)) equilibria.push_back(profile);
    // Odometer with agent 0 most significant, giving lexicographic order.
    for (std::size_t pos = cfg.n_agents; pos-- > 0;) {
      if (++digits[pos] < domain.size()) {
        domain.decode(digits[pos], x);
        profile.set(pos, x);
        break;
      }
      digits[pos] = 0;
      domain.decode(0, x);
      profile.set(pos, x);
    }
  }
  return equilibria;
}

std::vector<PopularityRow> popularity_series(std::span<const ProfileSample> samples) {
  std::vector<PopularityRow> rows;
  for (const auto& sample : samples) {
    std::map<Identity, std::size_t> counts;
    for (AgentId i = 0; i < sample.profile.n_agents(); ++i) ++counts[sample.profile.identity(i)];
    for (auto& [identity, count] : counts) rows.push_back({sample.step, identity, count});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const PopularityRow& a, const PopularityRow& b) { return a.step < b.step; });
  return rows;
}

Coord identity_span(const Profile& profile) {
  Coord widest = 0;
  for (std::size_t k = 0; k < profile.dims(); ++k) {
    Coord lo = std::numeric_limits<Coord>::max();
    Coord hi = std::numeric_limits<Coord>::min();
    for (AgentId i = 0; i < profile.n_agents(); ++i) {
      lo = std::min(lo, profile[i][k]);
      hi = std::max(hi, profile[i][k]);
    }
    if (profile.n_agents() > 0) widest = std::max(widest, hi - lo);
  }
  return widest;
}

std::optional<std::uint64_t> concentration_onset(std::span<const ProfileSample> samples, Coord width) {
  std::optional<std::uint64_t> onset;
  for (auto it = samples.rbegin(); it != samples.rend(); ++it) {
    if (identity_span(it->profile) > width) break;
    onset = it->step;
  }
  return onset;
}

std::optional<std::uint64_t> CampaignStats::convergence_quantile(double q) const {
  if (convergence_times.empty()) return std::nullopt;
  const auto n = convergence_times.size();
  auto rank = static_cast<std::size_t>(std::ceil(std::clamp(q, 0.0, 1.0) * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return convergence_times[rank - 1];
}

CampaignStats aggregate(std::span<const TrialRecord> records) {
  if (records.empty()) throw std::invalid_argument("no trial records to aggregate");
  CampaignStats stats;
  for (const auto& rec : records) {
    auto& net = stats.per_network[rec.network_id];
    ++net.trials;
    ++stats.trials;
    if (rec.converged) {
      stats.convergence_times.push_back(rec.steps_elapsed);
    } else {
      ++net.non_convergent;
      ++stats.non_convergent;
    }
  }
  std::sort(stats.convergence_times.begin(), stats.convergence_times.end());
  stats.non_convergence_rate = Rational(static_cast<std::int64_t>(stats.non_convergent), static_cast<std::int64_t>(stats.trials));
  for (const auto& [id, net] : stats.per_network) ++stats.histogram[net.non_convergent];
  return stats;
}

std::string records_csv(std::span<const TrialRecord> records) {
  std::ostringstream os;
  os << "network_id,trial_id,seed,converged,steps\n";
  for (const auto& r : records) {
    os << r.network_id << ',' << r.trial_id << ',' << r.seed << ',' << (r.converged ? 1 : 0) << ',' << r.steps_elapsed << '\n';
  }
  return os.str();
}

std::string network_stats_csv(const CampaignStats& stats) {
  std::ostringstream os;
  os << "network_id,trials,non_convergent\n";
  for (const auto& [id, net] : stats.per_network) os << id << ',' << net.trials << ',' << net.non_convergent << '\n';
  return os.str();
}

std::string histogram_csv(const CampaignStats& stats) {
  std::ostringstream os;
  os << "non_convergent_trials,networks\n";
  for (const auto& [count, networks] : stats.histogram) os << count << ',' << networks << '\n';
  return os.str();
}

std::string stats_json(const CampaignStats& stats) {
  nlohmann::ordered_json j;
  j["networks"] = stats.per_network.size();
  j["trials"] = stats.trials;
  j["non_convergent"] = stats.non_convergent;
  j["non_convergence_rate"] = stats.non_convergence_rate.str();
  j["non_convergence_rate_decimal"] = stats.non_convergence_rate.to_double();
  j["converged"] = stats.convergence_times.size();
  auto& q = j["convergence_steps"];
  if (stats.convergence_times.empty()) {
    q = nullptr;
  } else {
    q["min"] = stats.convergence_times.front();
    q["p25"] = *stats.convergence_quantile(0.25);
    q["median"] = *stats.convergence_quantile(0.5);
    q["p75"] = *stats.convergence_quantile(0.75);
    q["p90"] = *stats.convergence_quantile(0.9);
    q["max"] = stats.convergence_times.back();
  }
  nlohmann::ordered_json hist = nlohmann::ordered_json::array();
  for (const auto& [count, networks] : stats.histogram) hist.push_back({{"non_convergent_trials", count}, {"networks", networks}});
  j["histogram"] = std::move(hist);
  return j.dump(2) + "\n";
}

std::string trajectory_csv(std::span<const ProfileSample> samples) {
  std::ostringstream os;
  const std::size_t dims = samples.empty() ? 1 : samples.front().profile.dims();
  os << "step,agent";
  for (std::size_t k = 0; k < dims; ++k) os << ",x" << k;
  os << '\n';
  for (const auto& s : samples) {
    for (AgentId i = 0; i < s.profile.n_agents(); ++i) {
      os << s.step << ',' << i;
      for (Coord c : s.profile[i]) os << ',' << c;
      os << '\n';
    }
  }
  return os.str();
}

std::string popularity_csv(std::span<const PopularityRow> rows) {
  std::ostringstream os;
  const std::size_t dims = rows.empty() ? 1 : rows.front().identity.dims();
  os << "step";
  for (std::size_t k = 0; k < dims; ++k) os << ",x" << k;
  os << ",count\n";
  for (const auto& r : rows) {
    os << r.step;
    for (Coord c : r.identity.coords) os << ',' << c;
    os << ',' << r.count << '\n';
  }
  return os.str();
}

namespace {

template <class T>
bool parse_field(std::string_view token, T& out) {
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return !token.empty() && ec == std::errc{} && ptr == token.data() + token.size();
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  while (true) {
    const auto comma = line.find(',');
    fields.push_back(line.substr(0, comma));
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  return fields;
}

}  // namespace

std::vector<ProfileSample> read_trajectory_csv(std::string_view text) {
  std::size_t line_no = 0;
  std::size_t dims = 0;
  struct Row {
    std::uint64_t step;
    std::size_t agent;
    std::vector<Coord> coords;
  };
  std::vector<Row> rows;
  while (!text.empty()) {
    ++line_no;
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (dims == 0) {
      if (fields.size() < 3 || fields[0] != "step" || fields[1] != "agent") throw ParseError(line_no, "expected header 'step,agent,x0,...'");
      dims = fields.size() - 2;
      continue;
    }
    if (fields.size() != dims + 2) throw ParseError(line_no, "expected " + std::to_string(dims + 2) + " fields");
    Row row{0, 0, std::vector<Coord>(dims)};
    bool ok = parse_field(fields[0], row.step) && parse_field(fields[1], row.agent);
    for (std::size_t k = 0; k < dims && ok; ++k) ok = parse_field(fields[k + 2], row.coords[k]);
    if (!ok) throw ParseError(line_no, "malformed trajectory row '" + std::string(line) + "'");
    rows.push_back(std::move(row));
  }
  if (dims == 0) throw ParseError(line_no, "missing trajectory header");

  std::vector<ProfileSample> samples;
  for (std::size_t begin = 0; begin < rows.size();) {
    std::size_t end = begin;
    while (end < rows.size() && rows[end].step == rows[begin].step) ++end;
    Profile profile(end - begin, dims);
    for (std::size_t r = begin; r < end; ++r) {
      if (rows[r].agent != r - begin) {
        throw ParseError(0, "step " + std::to_string(rows[begin].step) + ": agents must be listed 0..N-1 in order");
      }
      profile.set(rows[r].agent, rows[r].coords);
    }
    if (!samples.empty() && samples.back().profile.n_agents() != profile.n_agents()) {
      throw ParseError(0, "step " + std::to_string(rows[begin].step) + ": agent count changed");
    }
    samples.push_back({rows[begin].step, std::move(profile)});
    begin = end;
  }
  return samples;
}

}  // namespace idgame
