#include <doctest.h>

#include <algorithm>

#include "idgame/dynamics.hpp"
#include "idgame/model.hpp"
#include "oracle.hpp"

using namespace idgame;

namespace {

const Rational kLambda(3, 2);

GameConfig one_dim(std::size_t n, Coord lo, Coord hi, Rational lambda = kLambda) {
  return GameConfig{n, 1, lo, hi, lambda};
}

DirectedNetwork lone_observer(std::size_t n_nodes = 2) {
  DirectedNetwork net(n_nodes);
  net.add_edge(0, 1);
  net.add_edge(1, 0);
  return net;
}

std::vector<Coord> scalars(const std::vector<Identity>& ids) {
  std::vector<Coord> out;
  for (const auto& id : ids) out.push_back(id.coords.at(0));
  return out;
}

}  // namespace

TEST_CASE("mean_identity") {
  CHECK(mean_identity(Profile::scalar({2, 4}), std::vector<AgentId>{0, 1}) == std::vector{Rational(3)});
  CHECK(mean_identity(Profile(2, {Identity{7, 7}}), std::vector<AgentId>{0}) == std::vector{Rational(7), Rational(7)});
  CHECK(mean_identity(Profile::scalar({0, 1, 3}), std::vector<AgentId>{0, 1, 2}) == std::vector{Rational(4, 3)});
  CHECK_THROWS_AS(mean_identity(Profile::scalar({1}), std::vector<AgentId>{}), std::domain_error);
}

TEST_CASE("same_count") {
  CHECK(same_count(Profile::scalar({5, 5, 5, 5, 5}), 0, std::vector<AgentId>{1, 2, 3, 4}) == 4);
  CHECK(same_count(Profile::scalar({0, 1, 2, 3, 4}), 2, std::vector<AgentId>{0, 1, 3, 4}) == 0);
  CHECK(same_count(Profile::scalar({3, 3, 4}), 0, std::vector<AgentId>{1, 2}) == 1);
  CHECK(same_count(Profile::scalar({3, 3}), 0, std::vector<AgentId>{}) == 0);
  CHECK(same_count(Profile(2, {Identity{1, 2}, Identity{1, 3}}), 0, std::vector<AgentId>{1}) == 0);
}

TEST_CASE("utility_wellmixed") {
  CHECK(utility_wellmixed(Profile::scalar({5, 5, 5}), 0, one_dim(3, 0, 9)) == Rational(-3));
  CHECK(utility_wellmixed(Profile::scalar({0, 2}), 0, one_dim(2, 0, 9)) == Rational(-1));
  // Frozen from the oracle: mean 1, one identical other.
  CHECK(utility_wellmixed(Profile::scalar({0, 0, 2, 2}), 0, one_dim(4, 0, 9)) == Rational(-5, 2));
  CHECK_THROWS_AS(utility_wellmixed(Profile::scalar({1}), 0, one_dim(2, 0, 9)), std::domain_error);
}

TEST_CASE("utility_network") {
  const auto cfg = one_dim(2, 0, 9);
  CHECK(utility_network(Profile::scalar({3, 4}), 0, lone_observer(), cfg) == Rational(-1));
  CHECK(utility_network(Profile::scalar({4, 4}), 0, lone_observer(), cfg) == Rational(-3, 2));

  const auto cycle = three_cycle();
  const auto x = Profile::scalar({0, 1, 2});
  const auto cfg3 = one_dim(3, 0, 9);
  CHECK(utility_network(x, 0, cycle, cfg3) == Rational(-1));
  CHECK(utility_network(x, 1, cycle, cfg3) == Rational(-1));
  CHECK(utility_network(x, 2, cycle, cfg3) == Rational(-4));

  DirectedNetwork isolated(2);
  isolated.add_edge(1, 0);
  CHECK_THROWS_AS(utility_network(Profile::scalar({1, 1}), 0, isolated, cfg), std::domain_error);
}

TEST_CASE("better_replies") {
  const auto env = Environment::networked(one_dim(2, 0, 9), lone_observer());
  CHECK(scalars(better_replies(Profile::scalar({4, 4}), 0, env)) == std::vector<Coord>{3, 5});
  // Already one unit away: the mirror point ties, which is not strict.
  CHECK(better_replies(Profile::scalar({3, 4}), 0, env).empty());

  // All distinct and exactly at the population mean: utility 0, nothing beats it.
  const auto wm = Environment::well_mixed(one_dim(3, 0, 9));
  CHECK(better_replies(Profile::scalar({4, 5, 6}), 1, wm).empty());

  DirectedNetwork isolated(2);
  isolated.add_edge(1, 0);
  const auto frozen = Environment::networked(one_dim(2, 0, 9), isolated);
  CHECK(better_replies(Profile::scalar({4, 4}), 0, frozen).empty());
}

TEST_CASE("best_responses") {
  const auto env = Environment::networked(one_dim(2, 0, 9), lone_observer());
  CHECK(scalars(best_responses(Profile::scalar({0, 4}), 0, env)) == std::vector<Coord>{3, 5});
  CHECK(scalars(best_responses(Profile::scalar({5, 0}), 0, env)) == std::vector<Coord>{1});

  // Without the uniqueness motive the best response is the nearest point to the mean.
  const auto wm = Environment::well_mixed(one_dim(3, 0, 9, Rational(0)));
  CHECK(scalars(best_responses(Profile::scalar({0, 3, 5}), 0, wm)) == std::vector<Coord>{4});
  CHECK(scalars(best_responses(Profile::scalar({0, 3, 4}), 0, wm)) == std::vector<Coord>{3, 4});
  const auto net0 = Environment::networked(one_dim(3, 0, 9, Rational(0)), complete_network(3));
  CHECK(scalars(best_responses(Profile::scalar({9, 2, 5}), 0, net0)) == std::vector<Coord>{3, 4});

  DirectedNetwork isolated(2);
  isolated.add_edge(1, 0);
  CHECK_THROWS_AS(best_responses(Profile::scalar({4, 4}), 0, Environment::networked(one_dim(2, 0, 9), isolated)),
                  std::domain_error);
}

TEST_CASE("game config validation") {
  CHECK_THROWS_AS(GameConfig({1, 1, 0, 9, kLambda}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(GameConfig({3, 1, 4, 4, kLambda}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(GameConfig({3, 0, 0, 4, kLambda}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(GameConfig({3, 1, 0, 4, Rational(-1)}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(GameConfig({1'000'000, 1, 0, 1'000'000, kLambda}).validate(), std::invalid_argument);
  CHECK(GameConfig{}.warnings().empty());
  CHECK(GameConfig({3, 1, 0, 4, Rational(1)}).warnings().size() == 1);
  CHECK_THROWS_AS(Environment::networked(one_dim(3, 0, 9), lone_observer()), std::invalid_argument);
}

TEST_CASE("domain indexing is a bijection") {
  const Domain d(3, -1, 2);
  CHECK(d.size() == 64);
  for (std::uint64_t k = 0; k < d.size(); ++k) {
    const auto id = d.at(k);
    REQUIRE(d.contains(id.coords));
    REQUIRE(d.index_of(id.coords) == k);
  }
  CHECK(d.at(0) == Identity{-1, -1, -1});
  CHECK(d.at(1) == Identity{-1, -1, 0});
  CHECK_FALSE(d.contains(std::vector<Coord>{3, 0, 0}));
}

// Property tests over random small games, checked against the oracle.
TEST_CASE("utilities and reply sets match the straight-from-formula oracle") {
  Rng rng(2024);
  for (int round = 0; round < 150; ++round) {
    const std::size_t n = 2 + rng.below(5);
    const std::size_t dims = 1 + rng.below(2);
    const Coord lo = static_cast<Coord>(rng.below(5)) - 2;
    const Coord hi = lo + 1 + static_cast<Coord>(rng.below(4));
    const Rational lambda(static_cast<std::int64_t>(rng.below(7)), 1 + static_cast<std::int64_t>(rng.below(3)));
    const GameConfig cfg{n, dims, lo, hi, lambda};

    std::optional<Environment> env;
    if (rng.below(3) == 0) {
      env.emplace(Environment::well_mixed(cfg));
    } else {
      DirectedNetwork net(n);
      for (NodeId i = 0; i < n; ++i) {
        for (NodeId j = 0; j < n; ++j) {
          if (i != j && rng.below(2) == 0) net.add_edge(i, j);
        }
      }
      env.emplace(Environment::networked(cfg, net));
    }
    const auto game = oracle::game_for(*env);
    const Profile x = random_profile(cfg, rng);
    const auto pts = oracle::points(x);

    for (AgentId i = 0; i < n; ++i) {
      if (env->is_frozen(i)) {
        CHECK_THROWS_AS(utility(x, i, *env), std::domain_error);
        CHECK(better_replies(x, i, *env).empty());
        continue;
      }
      const Rational u = utility(x, i, *env);
      REQUIRE(oracle::to_q(u) == game.utility(pts, i));
      REQUIRE(u <= Rational(0));
      REQUIRE(utility(x, i, *env) == u);

      const auto better = better_replies(x, i, *env);
      const auto expected = game.better_replies(pts, i);
      REQUIRE(better.size() == expected.size());
      for (std::size_t k = 0; k < better.size(); ++k) {
        REQUIRE(oracle::Point(better[k].coords.begin(), better[k].coords.end()) == expected[k]);
        Profile y = x;
        y.set(i, better[k]);
        REQUIRE(utility(y, i, *env) > u);
      }

      const auto best = best_responses(x, i, *env);
      REQUIRE(!best.empty());
      const Identity current = x.identity(i);
      if (better.empty()) {
        REQUIRE(std::find(best.begin(), best.end(), current) != best.end());
      } else {
        for (const auto& b : best) REQUIRE(std::find(better.begin(), better.end(), b) != better.end());
      }
    }
  }
}

TEST_CASE("utility is zero exactly at the mean with no identical reference member") {
  const auto env = Environment::networked(one_dim(3, 0, 9), complete_network(3));
  CHECK(utility(Profile::scalar({4, 3, 5}), 0, env) == Rational(0));
  CHECK(utility(Profile::scalar({4, 4, 4}), 0, env) < Rational(0));
  CHECK(utility(Profile::scalar({4, 3, 6}), 0, env) < Rational(0));
}

TEST_CASE("translation invariance") {
  Rng rng(77);
  const GameConfig cfg{6, 2, 0, 9, kLambda};
  DirectedNetwork net(6);
  for (NodeId i = 0; i < 6; ++i) {
    net.add_edge(i, (i + 1) % 6);
    net.add_edge(i, (i + 3) % 6);
  }
  const auto wm = Environment::well_mixed(cfg);
  const auto nw = Environment::networked(cfg, net);
  for (int round = 0; round < 50; ++round) {
    Profile x(6, 2);
    for (AgentId i = 0; i < 6; ++i) {
      x.set(i, Identity{static_cast<Coord>(rng.below(5)), static_cast<Coord>(rng.below(5))});
    }
    const Coord dx = static_cast<Coord>(rng.below(5));
    const Coord dy = static_cast<Coord>(rng.below(5));
    Profile shifted(6, 2);
    for (AgentId i = 0; i < 6; ++i) shifted.set(i, Identity{x[i][0] + dx, x[i][1] + dy});
    for (AgentId i = 0; i < 6; ++i) {
      REQUIRE(utility(x, i, wm) == utility(shifted, i, wm));
      REQUIRE(utility(x, i, nw) == utility(shifted, i, nw));
    }
  }
}

TEST_CASE("well-mixed utility versus the complete network") {
  // Uniqueness terms coincide; conformity terms differ by ((N-1)/N)^2 because
  // the well-mixed mean includes the agent itself.
  Rng rng(5);
  for (std::size_t n : {2, 3, 5, 8}) {
    const GameConfig cfg = one_dim(n, 0, 6);
    const GameConfig no_unique = one_dim(n, 0, 6, Rational(0));
    const auto complete = complete_network(n);
    for (int round = 0; round < 20; ++round) {
      const Profile x = random_profile(cfg, rng);
      for (AgentId i = 0; i < n; ++i) {
        const Rational wm_conf = -utility_wellmixed(x, i, no_unique);
        const Rational nw_conf = -utility_network(x, i, complete, no_unique);
        const auto nn = static_cast<std::int64_t>(n);
        REQUIRE(wm_conf == Rational(nn - 1, nn) * Rational(nn - 1, nn) * nw_conf);
        const Rational wm_unique = -(utility_wellmixed(x, i, cfg) + wm_conf);
        const Rational nw_unique = -(utility_network(x, i, complete, cfg) + nw_conf);
        REQUIRE(wm_unique == nw_unique);
      }
    }
  }
}

TEST_CASE("scaled scores order candidates exactly like rational utilities") {
  Rng rng(99);
  const GameConfig cfg{7, 2, 0, 4, Rational(7, 3)};
  const auto env = Environment::well_mixed(cfg);
  const Domain dom = cfg.domain();
  for (int round = 0; round < 30; ++round) {
    const Profile x = random_profile(cfg, rng);
    const OccupancyIndex occ(x, dom);
    for (AgentId i = 0; i < cfg.n_agents; ++i) {
      const ReplyScorer scan(x, i, env);
      const ReplyScorer indexed(x, i, env, &occ);
      REQUIRE(scan.current() == indexed.current());
      for (std::uint64_t a = 0; a < dom.size(); a += 3) {
        const auto ca = dom.at(a);
        const auto cb = dom.at((a * 7 + 1) % dom.size());
        Profile ya = x;
        ya.set(i, ca);
        Profile yb = x;
        yb.set(i, cb);
        const auto sa = indexed.score(ca.coords);
        const auto sb = indexed.score(cb.coords);
        REQUIRE(sa == scan.score(ca.coords));
        REQUIRE((sa < sb) == (utility(ya, i, env) < utility(yb, i, env)));
        REQUIRE((sa == sb) == (utility(ya, i, env) == utility(yb, i, env)));
      }
    }
  }
}
