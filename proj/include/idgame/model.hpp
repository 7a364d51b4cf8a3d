#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "idgame/network.hpp"
#include "idgame/rational.hpp"

namespace idgame {

using Coord = std::int32_t;
using AgentId = std::size_t;

/// One agent's expressed identity: a point of {lo..hi}^d.
struct Identity {
  std::vector<Coord> coords;

  Identity() = default;
  explicit Identity(std::vector<Coord> c) : coords(std::move(c)) {}
  Identity(std::initializer_list<Coord> c) : coords(c) {}
  explicit Identity(std::span<const Coord> c) : coords(c.begin(), c.end()) {}

  [[nodiscard]] std::size_t dims() const { return coords.size(); }
  [[nodiscard]] std::string str() const;

  friend auto operator<=>(const Identity&, const Identity&) = default;
};

/// The identities of all agents at one instant, stored row-major.
class Profile {
 public:
  Profile() = default;
  Profile(std::size_t n_agents, std::size_t dims, Coord fill = 0)
      : n_agents_(n_agents), dims_(dims), data_(n_agents * dims, fill) {}
  Profile(std::size_t dims, const std::vector<Identity>& identities);

  /// Convenience for one-dimensional profiles.
  static Profile scalar(std::initializer_list<Coord> values);

  [[nodiscard]] std::size_t n_agents() const { return n_agents_; }
  [[nodiscard]] std::size_t dims() const { return dims_; }

  [[nodiscard]] std::span<const Coord> operator[](AgentId i) const {
    return {data_.data() + i * dims_, dims_};
  }
  [[nodiscard]] Identity identity(AgentId i) const { return Identity((*this)[i]); }
  void set(AgentId i, std::span<const Coord> coords);
  void set(AgentId i, const Identity& id) { set(i, std::span<const Coord>(id.coords)); }

  [[nodiscard]] std::span<const Coord> data() const { return data_; }

  friend bool operator==(const Profile&, const Profile&) = default;

 private:
  std::size_t n_agents_ = 0;
  std::size_t dims_ = 0;
  std::vector<Coord> data_;
};

/// The finite strategy set {lo..hi}^dims, with a dense mixed-radix index.
class Domain {
 public:
  Domain(std::size_t dims, Coord lo, Coord hi);

  [[nodiscard]] std::size_t dims() const { return dims_; }
  [[nodiscard]] Coord lo() const { return lo_; }
  [[nodiscard]] Coord hi() const { return hi_; }
  [[nodiscard]] std::uint64_t size() const { return size_; }
  [[nodiscard]] bool contains(std::span<const Coord> coords) const;

  [[nodiscard]] std::uint64_t index_of(std::span<const Coord> coords) const;
  void decode(std::uint64_t index, std::span<Coord> out) const;
  [[nodiscard]] Identity at(std::uint64_t index) const;

 private:
  std::size_t dims_;
  Coord lo_;
  Coord hi_;
  std::uint64_t width_;
  std::uint64_t size_;
};

/// Game parameters shared by both population modes.
struct GameConfig {
  std::size_t n_agents = 100;
  std::size_t dims = 1;
  Coord lo = 0;
  Coord hi = 199;
  Rational lambda{3, 2};

  [[nodiscard]] Domain domain() const { return {dims, lo, hi}; }

  /// Throws std::invalid_argument for unusable configurations, including
  /// ones whose scaled integer utilities could overflow.
  void validate() const;
  /// Non-fatal observations (for example a uniqueness weight of at most one).
  [[nodiscard]] std::vector<std::string> warnings() const;
};

/// Game plus population structure. A null network means well-mixed.
class Environment {
 public:
  explicit Environment(GameConfig config) : config_(std::move(config)) { config_.validate(); }
  Environment(GameConfig config, std::shared_ptr<const DirectedNetwork> network);

  static Environment well_mixed(GameConfig config) { return Environment(std::move(config)); }
  static Environment networked(GameConfig config, DirectedNetwork network) {
    return {std::move(config), std::make_shared<const DirectedNetwork>(std::move(network))};
  }

  [[nodiscard]] const GameConfig& config() const { return config_; }
  [[nodiscard]] bool is_well_mixed() const { return network_ == nullptr; }
  [[nodiscard]] const DirectedNetwork& network() const;
  [[nodiscard]] const std::shared_ptr<const DirectedNetwork>& network_ptr() const { return network_; }

  /// Agents with no reference group (isolated nodes) never revise.
  [[nodiscard]] bool is_frozen(AgentId i) const {
    return network_ != nullptr && network_->out_degree(static_cast<NodeId>(i)) == 0;
  }

  /// Agent i's reference group: all others when well-mixed, else its out-neighbors.
  [[nodiscard]] std::vector<AgentId> reference_group(AgentId i) const;

 private:
  GameConfig config_;
  std::shared_ptr<const DirectedNetwork> network_;
};

/// Componentwise mean of the members' identities. Throws std::domain_error if empty.
std::vector<Rational> mean_identity(const Profile& profile, std::span<const AgentId> members);

/// Number of members whose identity equals agent i's in every coordinate.
std::size_t same_count(const Profile& profile, AgentId i, std::span<const AgentId> members);

/// -|x_i - mean|^2 - lambda * n_i, with the mean over all agents including i
/// and n_i counted over every j != i.
Rational utility_wellmixed(const Profile& profile, AgentId i, const GameConfig& config);

/// -|x_i - mean_eta(i)|^2 - lambda * n_i(eta(i)); the mean excludes i.
/// Throws std::domain_error if i has no out-neighbors.
Rational utility_network(const Profile& profile, AgentId i, const DirectedNetwork& network,
                         const GameConfig& config);

/// Dispatches on the environment's population mode.
Rational utility(const Profile& profile, AgentId i, const Environment& env);

/// Occupancy of each domain point, used to count identical identities in O(1).
class OccupancyIndex {
 public:
  OccupancyIndex(const Profile& profile, const Domain& domain);

  [[nodiscard]] std::uint32_t count(std::uint64_t domain_index) const { return counts_[domain_index]; }
  void move(std::uint64_t from, std::uint64_t to) {
    --counts_[from];
    ++counts_[to];
  }

 private:
  std::vector<std::uint32_t> counts_;
};

/// Agent i's utility up to a positive agent-specific factor, in exact integers.
///
/// The factor is den(lambda) * m^2 with m = N (well-mixed) or |eta(i)|, so
/// comparisons between candidates for the same agent are exact and match the
/// rational utilities. Scores of different agents are not comparable.
class ReplyScorer {
 public:
  /// `occupancy` (well-mixed only) must describe `profile`; when omitted,
  /// identical identities are counted by scanning.
  ReplyScorer(const Profile& profile, AgentId agent, const Environment& env,
              const OccupancyIndex* occupancy = nullptr);

  [[nodiscard]] std::int64_t score(std::span<const Coord> candidate) const;
  [[nodiscard]] std::int64_t score(std::span<const Coord> candidate, std::uint64_t domain_index) const;
  [[nodiscard]] std::int64_t current() const { return current_; }

 private:
  [[nodiscard]] std::int64_t conformity_term(std::span<const Coord> candidate) const;
  [[nodiscard]] std::int64_t matches(std::span<const Coord> candidate, std::uint64_t domain_index) const;

  const Profile& profile_;
  const Environment& env_;
  const OccupancyIndex* occupancy_;
  Domain domain_;
  AgentId agent_;
  std::vector<AgentId> group_;
  std::vector<std::int64_t> group_sum_;
  std::int64_t multiplier_;  // N - 1 (well-mixed) or |eta(i)|
  std::int64_t lambda_num_;
  std::int64_t lambda_den_;
  std::int64_t uniqueness_scale_;
  std::int64_t current_;
};

/// Identities strictly better for agent i than its current one. Empty for frozen agents.
std::vector<Identity> better_replies(const Profile& profile, AgentId i, const Environment& env);

/// All maximizers of agent i's utility over the whole domain.
std::vector<Identity> best_responses(const Profile& profile, AgentId i, const Environment& env);

}  // namespace idgame
