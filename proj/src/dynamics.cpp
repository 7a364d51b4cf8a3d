#include "idgame/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace idgame {

namespace {

// Strict better-reply acceptance. The fault-injection build weakens it to >=.
constexpr bool improves(std::int64_t candidate, std::int64_t current) {
#ifdef IDGAME_FAULT_WEAK_INEQUALITY
  return candidate >= current;
#else
  return candidate > current;
#endif
}

}  // namespace

void DynamicsConfig::validate() const {
  if (max_steps == 0) throw std::invalid_argument("max_steps must be positive");
  if (check_interval == 0) throw std::invalid_argument("check_interval must be positive");
  if (check_interval > max_steps) throw std::invalid_argument("check_interval must not exceed max_steps");
}

Profile random_profile(const GameConfig& config, Rng& rng) {
  Profile profile(config.n_agents, config.dims);
  const auto width = static_cast<std::uint64_t>(static_cast<std::int64_t>(config.hi) - config.lo + 1);
  std::vector<Coord> x(config.dims);
  for (AgentId i = 0; i < config.n_agents; ++i) {
    for (auto& c : x) c = static_cast<Coord>(config.lo + static_cast<std::int64_t>(rng.below(width)));
    profile.set(i, x);
  }
  return profile;
}

BetterReplyProcess::BetterReplyProcess(const Environment& env, Profile initial, SearchMode mode)
    : env_(env), domain_(env.config().domain()), profile_(std::move(initial)), mode_(mode) {
  const auto& cfg = env.config();
  if (profile_.n_agents() != cfg.n_agents || profile_.dims() != cfg.dims) {
    throw std::invalid_argument("profile shape does not match the game");
  }
  for (AgentId i = 0; i < profile_.n_agents(); ++i) {
    if (!domain_.contains(profile_[i])) throw std::invalid_argument("agent " + std::to_string(i) + " outside the domain");
  }
  if (env.is_well_mixed()) occupancy_.emplace(profile_, domain_);
  if (mode == SearchMode::SequentialScan) {
    scan_order_.resize(static_cast<std::size_t>(domain_.size()));
    std::iota(scan_order_.begin(), scan_order_.end(), std::uint64_t{0});
  }
}

void BetterReplyProcess::adopt(AgentId agent, std::span<const Coord> candidate, std::uint64_t candidate_index) {
  if (occupancy_) occupancy_->move(domain_.index_of(profile_[agent]), candidate_index);
  profile_.set(agent, candidate);
}

std::optional<Revision> BetterReplyProcess::step(Rng& rng) {
  ++steps_;
  const auto agent = static_cast<AgentId>(rng.below(profile_.n_agents()));
  if (env_.is_frozen(agent)) return std::nullopt;

  const ReplyScorer scorer(profile_, agent, env_, occupancy_ ? &*occupancy_ : nullptr);
  std::vector<Coord> candidate(domain_.dims());
  std::optional<std::uint64_t> chosen;
  if (mode_ == SearchMode::RandomCandidate) {
    const std::uint64_t c = rng.below(domain_.size());
    domain_.decode(c, candidate);
    if (improves(scorer.score(candidate, c), scorer.current())) chosen = c;
  } else {
    rng.shuffle(std::span<std::uint64_t>(scan_order_));
    for (std::uint64_t c : scan_order_) {
      domain_.decode(c, candidate);
      if (improves(scorer.score(candidate, c), scorer.current())) {
        chosen = c;
        break;
      }
    }
  }
  if (!chosen) return std::nullopt;
  Revision rev{steps_, agent, profile_.identity(agent), Identity(candidate)};
  adopt(agent, candidate, *chosen);
  return rev;
}

bool BetterReplyProcess::has_better_reply(AgentId agent) const {
  if (env_.is_frozen(agent)) return false;
  const ReplyScorer scorer(profile_, agent, env_, occupancy_ ? &*occupancy_ : nullptr);
  std::vector<Coord> candidate(domain_.dims());
  for (std::uint64_t c = 0; c < domain_.size(); ++c) {
    domain_.decode(c, candidate);
    if (scorer.score(candidate, c) > scorer.current()) return true;
  }
  return false;
}

bool BetterReplyProcess::is_pure_nash() const {
  for (AgentId i = 0; i < profile_.n_agents(); ++i) {
    if (has_better_reply(i)) return false;
  }
  return true;
}

std::optional<Revision> step(Profile& profile, const Environment& env, Rng& rng, SearchMode mode) {
  BetterReplyProcess process(env, profile, mode);
  auto rev = process.step(rng);
  profile = process.profile();
  return rev;
}

bool is_pure_nash(const Profile& profile, const Environment& env) {
  return BetterReplyProcess(env, profile, SearchMode::RandomCandidate).is_pure_nash();
}

namespace {

void audit_revision(const Profile& after, const Revision& rev, const Environment& env) {
  Profile before = after;
  before.set(rev.agent, rev.from);
  const Rational old_u = utility(before, rev.agent, env);
  const Rational new_u = utility(after, rev.agent, env);
  if (!(new_u > old_u)) {
    throw std::logic_error("revision at step " + std::to_string(rev.step) + " by agent " + std::to_string(rev.agent) +
                           " does not raise utility: " + old_u.str() + " -> " + new_u.str());
  }
}

}  // namespace

TrialRecord run_trial(const std::optional<Profile>& initial, const Environment& env, const DynamicsConfig& config) {
  config.validate();
  Rng rng(config.rng_seed);
  TrialRecord record;
  record.seed = config.rng_seed;
  record.initial_profile = initial ? *initial : random_profile(env.config(), rng);

  BetterReplyProcess process(env, record.initial_profile, config.search_mode);
  const auto sample_due = [&](std::uint64_t t) {
    const auto interval = config.trajectory_sample_interval;
    return interval > 0 && t >= config.trajectory_sample_offset && (t - config.trajectory_sample_offset) % interval == 0;
  };
  if (sample_due(0)) record.samples.push_back({0, process.profile()});

  for (std::uint64_t t = 1; t <= config.max_steps; ++t) {
    auto rev = process.step(rng);
    if (rev) {
      if (config.audit) audit_revision(process.profile(), *rev, env);
      if (config.log_revisions) record.revisions.push_back(std::move(*rev));
    }
    if (sample_due(t)) record.samples.push_back({t, process.profile()});
    if (t % config.check_interval == 0 && process.is_pure_nash()) {
      record.converged = true;
      record.steps_elapsed = t;
      break;
    }
  }
  if (!record.converged) record.steps_elapsed = config.max_steps;
  record.final_profile = process.profile();
  return record;
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t network, std::size_t trial) {
  return derive_seed(master_seed ^ kTrialStream, network, trial);
}

std::vector<TrialRecord> run_campaign(std::span<const Environment> envs, std::size_t trials_per_network,
                                      const DynamicsConfig& config, std::uint64_t master_seed, std::size_t workers) {
  if (envs.empty()) throw std::invalid_argument("campaign needs at least one population");
  config.validate();
  const std::size_t total = envs.size() * trials_per_network;
  std::vector<TrialRecord> records(total);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t job = next++; job < total; job = next++) {
      const std::size_t net = job / trials_per_network;
      const std::size_t trial = job % trials_per_network;
      try {
        DynamicsConfig trial_config = config;
        trial_config.rng_seed = trial_seed(master_seed, net, trial);
        TrialRecord rec = run_trial(std::nullopt, envs[net], trial_config);
        rec.network_id = net;
        rec.trial_id = trial;
        records[job] = std::move(rec);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(total, 1));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return records;
}

}  // namespace idgame
