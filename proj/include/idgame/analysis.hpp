#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "idgame/dynamics.hpp"
#include "idgame/model.hpp"
#include "idgame/rational.hpp"

namespace idgame {

/// Exact potential of the well-mixed game:
///   -sum_i [ (N-1)/N |x_i - mean|^2 + lambda/2 * n_i ]
Rational potential(const Profile& profile, const GameConfig& config);
/// Throws std::domain_error for networked environments, which have no potential.
Rational potential(const Profile& profile, const Environment& env);

struct PotentialCounterexample {
  Profile profile;
  AgentId agent;
  Identity deviation;
  Rational potential_change;
  Rational utility_change;
};

struct PotentialReport {
  std::size_t samples = 0;
  std::vector<PotentialCounterexample> violations;
  [[nodiscard]] bool passed() const { return violations.empty(); }
};

/// Checks potential(X') - potential(X) == u_i(X') - u_i(X) exactly on
/// `n_samples` random (profile, agent, deviation) triples.
PotentialReport verify_exact_potential(const GameConfig& config, std::size_t n_samples, std::uint64_t rng_seed);

struct TrajectoryAudit {
  std::size_t revisions = 0;
  /// Human-readable description of each revision that failed to raise the
  /// potential by exactly the reviser's utility gain.
  std::vector<std::string> failures;
  [[nodiscard]] bool passed() const { return failures.empty(); }
};

/// Replays a well-mixed trial's revision log from its initial profile and
/// checks that every revision strictly raises the potential by exactly the
/// reviser's utility gain. Requires a record produced with log_revisions.
TrajectoryAudit audit_potential_trajectory(const TrialRecord& record, const Environment& env);

class EnumerationBudgetExceeded : public std::runtime_error {
 public:
  EnumerationBudgetExceeded(std::uint64_t required, std::uint64_t budget);
  [[nodiscard]] std::uint64_t required() const { return required_; }
  [[nodiscard]] std::uint64_t budget() const { return budget_; }

 private:
  std::uint64_t required_;
  std::uint64_t budget_;
};

inline constexpr std::uint64_t kDefaultEnumerationBudget = 10'000'000;

/// Number of profiles, |domain|^N, or nullopt if it exceeds 2^64.
std::optional<std::uint64_t> profile_space_size(const GameConfig& config);

/// Every pure Nash equilibrium, in lexicographic profile order. Refuses with
/// EnumerationBudgetExceeded when the profile space exceeds `budget`.
std::vector<Profile> enumerate_pure_nash(const Environment& env, std::uint64_t budget = kDefaultEnumerationBudget);

struct PopularityRow {
  std::uint64_t step;
  Identity identity;
  std::size_t count;

  friend bool operator==(const PopularityRow&, const PopularityRow&) = default;
};

/// Adoption counts of each identity at each sampled step, ordered by
/// (step, identity).
std::vector<PopularityRow> popularity_series(std::span<const ProfileSample> samples);

/// Largest per-coordinate spread (max - min) of a profile's identities.
Coord identity_span(const Profile& profile);

/// Earliest sampled step from which every later sample has identity span
/// <= `width`, or nullopt if the final sample is wider.
std::optional<std::uint64_t> concentration_onset(std::span<const ProfileSample> samples, Coord width);

struct NetworkStats {
  std::size_t trials = 0;
  std::size_t non_convergent = 0;
};

struct CampaignStats {
  std::map<std::size_t, NetworkStats> per_network;
  std::size_t trials = 0;
  std::size_t non_convergent = 0;
  Rational non_convergence_rate;
  /// non-convergent trial count -> number of networks with that count
  std::map<std::size_t, std::size_t> histogram;
  /// Sorted steps-to-convergence of converged trials.
  std::vector<std::uint64_t> convergence_times;

  [[nodiscard]] Rational convergence_rate() const { return Rational(1) - non_convergence_rate; }
  /// Nearest-rank quantile of convergence_times; nullopt if none converged.
  [[nodiscard]] std::optional<std::uint64_t> convergence_quantile(double q) const;
};

/// Summarizes records grouped by network_id. Independent of record order.
CampaignStats aggregate(std::span<const TrialRecord> records);

// Artifact writers. Formats:
//   records:    network_id,trial_id,seed,converged,steps
//   per-network network_id,trials,non_convergent
//   histogram:  non_convergent_trials,networks
//   trajectory: step,agent,x0[,x1...]
std::string records_csv(std::span<const TrialRecord> records);
std::string network_stats_csv(const CampaignStats& stats);
std::string histogram_csv(const CampaignStats& stats);
std::string stats_json(const CampaignStats& stats);
std::string trajectory_csv(std::span<const ProfileSample> samples);
std::string popularity_csv(std::span<const PopularityRow> rows);

/// Parses trajectory_csv output back into samples. Throws ParseError.
std::vector<ProfileSample> read_trajectory_csv(std::string_view text);

}  // namespace idgame
