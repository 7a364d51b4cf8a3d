#include "idgame/model.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace idgame {

std::string Identity::str() const {
  std::string out = "(";
  for (std::size_t k = 0; k < coords.size(); ++k) {
    if (k > 0) out += ",";
    out += std::to_string(coords[k]);
  }
  return out + ")";
}

Profile::Profile(std::size_t dims, const std::vector<Identity>& identities)
    : n_agents_(identities.size()), dims_(dims), data_(identities.size() * dims) {
  for (AgentId i = 0; i < identities.size(); ++i) set(i, identities[i]);
}

Profile Profile::scalar(std::initializer_list<Coord> values) {
  Profile p(values.size(), 1);
  std::copy(values.begin(), values.end(), p.data_.begin());
  return p;
}

void Profile::set(AgentId i, std::span<const Coord> coords) {
  if (coords.size() != dims_) throw std::invalid_argument("identity has wrong dimension");
  std::copy(coords.begin(), coords.end(), data_.begin() + static_cast<std::ptrdiff_t>(i * dims_));
}

Domain::Domain(std::size_t dims, Coord lo, Coord hi) : dims_(dims), lo_(lo), hi_(hi) {
  if (dims == 0) throw std::invalid_argument("identity needs at least one dimension");
  if (hi <= lo) throw std::invalid_argument("identity range needs hi > lo");
  width_ = static_cast<std::uint64_t>(static_cast<std::int64_t>(hi) - lo + 1);
  size_ = 1;
  for (std::size_t k = 0; k < dims; ++k) {
    if (size_ > std::numeric_limits<std::uint64_t>::max() / width_) {
      throw std::invalid_argument("identity domain too large to index");
    }
    size_ *= width_;
  }
}

bool Domain::contains(std::span<const Coord> coords) const {
  return coords.size() == dims_ &&
         std::all_of(coords.begin(), coords.end(), [&](Coord c) { return c >= lo_ && c <= hi_; });
}

std::uint64_t Domain::index_of(std::span<const Coord> coords) const {
  std::uint64_t index = 0;
  for (Coord c : coords) index = index * width_ + static_cast<std::uint64_t>(c - lo_);
  return index;
}

void Domain::decode(std::uint64_t index, std::span<Coord> out) const {
  for (std::size_t k = dims_; k-- > 0;) {
    out[k] = static_cast<Coord>(lo_ + static_cast<std::int64_t>(index % width_));
    index /= width_;
  }
}

Identity Domain::at(std::uint64_t index) const {
  Identity id;
  id.coords.resize(dims_);
  decode(index, id.coords);
  return id;
}

void GameConfig::validate() const {
  if (n_agents < 2) throw std::invalid_argument("game needs at least 2 agents");
  if (lambda < Rational(0)) throw std::invalid_argument("uniqueness weight must be non-negative");
  const Domain dom = domain();
  (void)dom;
  // Largest scaled score magnitude must fit in int64 (see ReplyScorer).
  const __int128 range = std::max<__int128>(std::abs(static_cast<std::int64_t>(lo)), std::abs(static_cast<std::int64_t>(hi)));
  const __int128 n = static_cast<__int128>(n_agents);
  const __int128 dist = 2 * n * range;
  __int128 bound = dist * dist * static_cast<__int128>(dims) * lambda.den() + static_cast<__int128>(lambda.num()) * n * n * n;
  if (bound > std::numeric_limits<std::int64_t>::max() / 2) {
    throw std::invalid_argument("game too large for exact integer utility comparison");
  }
}

std::vector<std::string> GameConfig::warnings() const {
  std::vector<std::string> out;
  if (lambda <= Rational(1)) {
    out.push_back("uniqueness weight " + lambda.str() + " <= 1: the three-cycle non-existence construction needs lambda > 1");
  }
  return out;
}

Environment::Environment(GameConfig config, std::shared_ptr<const DirectedNetwork> network)
    : config_(std::move(config)), network_(std::move(network)) {
  config_.validate();
  if (network_ && network_->n_nodes() != config_.n_agents) {
    throw std::invalid_argument("network has " + std::to_string(network_->n_nodes()) + " nodes but game has " +
                                std::to_string(config_.n_agents) + " agents");
  }
}

const DirectedNetwork& Environment::network() const {
  if (!network_) throw std::logic_error("well-mixed environment has no network");
  return *network_;
}

std::vector<AgentId> Environment::reference_group(AgentId i) const {
  std::vector<AgentId> group;
  if (network_) {
    const auto out = network_->out_neighbors(static_cast<NodeId>(i));
    group.assign(out.begin(), out.end());
  } else {
    group.reserve(config_.n_agents - 1);
    for (AgentId j = 0; j < config_.n_agents; ++j) {
      if (j != i) group.push_back(j);
    }
  }
  return group;
}

std::vector<Rational> mean_identity(const Profile& profile, std::span<const AgentId> members) {
  if (members.empty()) throw std::domain_error("mean identity of an empty group is undefined");
  std::vector<std::int64_t> sum(profile.dims(), 0);
  for (AgentId j : members) {
    const auto x = profile[j];
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += x[k];
  }
  std::vector<Rational> mean;
  mean.reserve(sum.size());
  for (auto s : sum) mean.emplace_back(s, static_cast<std::int64_t>(members.size()));
  return mean;
}

std::size_t same_count(const Profile& profile, AgentId i, std::span<const AgentId> members) {
  const auto xi = profile[i];
  return static_cast<std::size_t>(std::count_if(members.begin(), members.end(), [&](AgentId j) {
    return j != i && std::ranges::equal(profile[j], xi);
  }));
}

namespace {

Rational squared_distance(std::span<const Coord> x, const std::vector<Rational>& mean) {
  Rational total;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const Rational diff = Rational(x[k]) - mean[k];
    total += diff * diff;
  }
  return total;
}

}  // namespace

Rational utility_wellmixed(const Profile& profile, AgentId i, const GameConfig& config) {
  const std::size_t n = profile.n_agents();
  if (n < 2) throw std::domain_error("well-mixed utility needs at least 2 agents");
  std::vector<AgentId> everyone(n);
  for (AgentId j = 0; j < n; ++j) everyone[j] = j;
  const auto mean = mean_identity(profile, everyone);
  return -squared_distance(profile[i], mean) -
         config.lambda * Rational(static_cast<std::int64_t>(same_count(profile, i, everyone)));
}

Rational utility_network(const Profile& profile, AgentId i, const DirectedNetwork& network,
                         const GameConfig& config) {
  const auto out = network.out_neighbors(static_cast<NodeId>(i));
  if (out.empty()) throw std::domain_error("agent " + std::to_string(i) + " observes nobody; utility undefined");
  const std::vector<AgentId> group(out.begin(), out.end());
  const auto mean = mean_identity(profile, group);
  return -squared_distance(profile[i], mean) -
         config.lambda * Rational(static_cast<std::int64_t>(same_count(profile, i, group)));
}

Rational utility(const Profile& profile, AgentId i, const Environment& env) {
  if (env.is_well_mixed()) return utility_wellmixed(profile, i, env.config());
  return utility_network(profile, i, env.network(), env.config());
}

OccupancyIndex::OccupancyIndex(const Profile& profile, const Domain& domain) {
  if (domain.size() > (std::uint64_t{1} << 26)) throw std::invalid_argument("identity domain too large for occupancy index");
  counts_.assign(static_cast<std::size_t>(domain.size()), 0);
  for (AgentId j = 0; j < profile.n_agents(); ++j) ++counts_[domain.index_of(profile[j])];
}

ReplyScorer::ReplyScorer(const Profile& profile, AgentId agent, const Environment& env,
                         const OccupancyIndex* occupancy)
    : profile_(profile),
      env_(env),
      occupancy_(env.is_well_mixed() ? occupancy : nullptr),
      domain_(env.config().domain()),
      agent_(agent),
      group_sum_(profile.dims(), 0),
      lambda_num_(env.config().lambda.num()),
      lambda_den_(env.config().lambda.den()) {
  const auto n = static_cast<std::int64_t>(profile.n_agents());
  if (env.is_well_mixed()) {
    // N (x - mean) = (N-1) x - sum of the others.
    multiplier_ = n - 1;
    uniqueness_scale_ = n * n;
    for (AgentId j = 0; j < profile.n_agents(); ++j) {
      if (j == agent) continue;
      const auto x = profile[j];
      for (std::size_t k = 0; k < group_sum_.size(); ++k) group_sum_[k] += x[k];
    }
    if (occupancy_ == nullptr) group_ = env.reference_group(agent);
  } else {
    group_ = env.reference_group(agent);
    if (group_.empty()) throw std::domain_error("agent " + std::to_string(agent) + " observes nobody; utility undefined");
    multiplier_ = static_cast<std::int64_t>(group_.size());
    uniqueness_scale_ = multiplier_ * multiplier_;
    for (AgentId j : group_) {
      const auto x = profile[j];
      for (std::size_t k = 0; k < group_sum_.size(); ++k) group_sum_[k] += x[k];
    }
  }
  current_ = score(profile[agent]);
}

std::int64_t ReplyScorer::conformity_term(std::span<const Coord> candidate) const {
  std::int64_t total = 0;
  for (std::size_t k = 0; k < candidate.size(); ++k) {
    const std::int64_t diff = multiplier_ * candidate[k] - group_sum_[k];
    total += diff * diff;
  }
  return total;
}

std::int64_t ReplyScorer::matches(std::span<const Coord> candidate, std::uint64_t domain_index) const {
  if (occupancy_ != nullptr) {
    std::int64_t count = occupancy_->count(domain_index);
    if (std::ranges::equal(profile_[agent_], candidate)) --count;
    return count;
  }
  std::int64_t count = 0;
  for (AgentId j : group_) {
    if (std::ranges::equal(profile_[j], candidate)) ++count;
  }
  return count;
}

std::int64_t ReplyScorer::score(std::span<const Coord> candidate, std::uint64_t domain_index) const {
  return -lambda_den_ * conformity_term(candidate) - lambda_num_ * uniqueness_scale_ * matches(candidate, domain_index);
}

std::int64_t ReplyScorer::score(std::span<const Coord> candidate) const {
  return score(candidate, occupancy_ != nullptr ? domain_.index_of(candidate) : 0);
}

std::vector<Identity> better_replies(const Profile& profile, AgentId i, const Environment& env) {
  std::vector<Identity> result;
  if (env.is_frozen(i)) return result;
  const Domain domain = env.config().domain();
  const ReplyScorer scorer(profile, i, env);
  std::vector<Coord> candidate(domain.dims());
  for (std::uint64_t c = 0; c < domain.size(); ++c) {
    domain.decode(c, candidate);
    if (scorer.score(candidate) > scorer.current()) result.emplace_back(std::vector<Coord>(candidate));
  }
  return result;
}

std::vector<Identity> best_responses(const Profile& profile, AgentId i, const Environment& env) {
  if (env.is_frozen(i)) throw std::domain_error("agent " + std::to_string(i) + " observes nobody; no best response");
  const Domain domain = env.config().domain();
  const ReplyScorer scorer(profile, i, env);
  std::vector<Identity> result;
  std::int64_t best = std::numeric_limits<std::int64_t>::min();
  std::vector<Coord> candidate(domain.dims());
  for (std::uint64_t c = 0; c < domain.size(); ++c) {
    domain.decode(c, candidate);
    const auto s = scorer.score(candidate);
    if (s > best) {
      best = s;
      result.clear();
    }
    if (s == best) result.emplace_back(std::vector<Coord>(candidate));
  }
  return result;
}

}  // namespace idgame
