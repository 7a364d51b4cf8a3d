#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "idgame/model.hpp"
#include "idgame/random.hpp"

namespace idgame {

enum class SearchMode {
  RandomCandidate,  ///< one uniformly drawn candidate per step
  SequentialScan,   ///< scan the domain in fresh random order, adopt the first improvement
};

struct DynamicsConfig {
  SearchMode search_mode = SearchMode::SequentialScan;
  std::uint64_t max_steps = 30000;
  std::uint64_t check_interval = 200;
  /// Profiles are sampled at steps offset, offset + interval, ... (0 = off).
  std::uint64_t trajectory_sample_interval = 0;
  std::uint64_t trajectory_sample_offset = 0;
  bool log_revisions = false;
  /// Re-evaluate every adopted revision with exact rational utilities and
  /// throw std::logic_error unless it is a strict improvement.
  bool audit = false;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct Revision {
  std::uint64_t step;
  AgentId agent;
  Identity from;
  Identity to;

  friend bool operator==(const Revision&, const Revision&) = default;
};

struct ProfileSample {
  std::uint64_t step;
  Profile profile;

  friend bool operator==(const ProfileSample&, const ProfileSample&) = default;
};

struct TrialRecord {
  std::size_t network_id = 0;
  std::size_t trial_id = 0;
  std::uint64_t seed = 0;
  bool converged = false;
  std::uint64_t steps_elapsed = 0;
  Profile initial_profile;
  Profile final_profile;
  std::vector<ProfileSample> samples;
  std::vector<Revision> revisions;

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

/// Uniformly random profile over the game's domain.
Profile random_profile(const GameConfig& config, Rng& rng);

/// Asynchronous better-reply process on one environment.
///
/// Owns the profile and, for well-mixed games, the occupancy index that
/// makes each candidate evaluation O(d).
class BetterReplyProcess {
 public:
  BetterReplyProcess(const Environment& env, Profile initial, SearchMode mode);

  /// One time step: a uniformly random agent searches once and adopts a
  /// strictly better identity if found. Frozen agents consume the step.
  std::optional<Revision> step(Rng& rng);

  /// True iff no agent has a strictly better reply anywhere in the domain.
  [[nodiscard]] bool is_pure_nash() const;

  [[nodiscard]] const Profile& profile() const { return profile_; }
  [[nodiscard]] std::uint64_t steps() const { return steps_; }

 private:
  [[nodiscard]] bool has_better_reply(AgentId agent) const;
  void adopt(AgentId agent, std::span<const Coord> candidate, std::uint64_t candidate_index);

  const Environment& env_;
  Domain domain_;
  Profile profile_;
  SearchMode mode_;
  std::optional<OccupancyIndex> occupancy_;
  std::vector<std::uint64_t> scan_order_;
  std::uint64_t steps_ = 0;
};

/// Applies one step of the process to `profile` in place.
std::optional<Revision> step(Profile& profile, const Environment& env, Rng& rng, SearchMode mode);

/// Exhaustive check: no agent can strictly improve. Frozen agents pass vacuously.
bool is_pure_nash(const Profile& profile, const Environment& env);

/// Runs one trial. Without an initial profile, starts from a uniformly
/// random one drawn from the trial's own stream.
TrialRecord run_trial(const std::optional<Profile>& initial, const Environment& env, const DynamicsConfig& config);

/// Seed of trial `trial` on network `network` under `master_seed`.
std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t network, std::size_t trial);

/// Runs `trials_per_network` random-start trials on every environment.
/// Records come back in (network, trial) order whatever `workers` is.
std::vector<TrialRecord> run_campaign(std::span<const Environment> envs, std::size_t trials_per_network,
                                      const DynamicsConfig& config, std::uint64_t master_seed,
                                      std::size_t workers = 1);

}  // namespace idgame
