#include <doctest.h>

#include <algorithm>

#include <json.hpp>

#include "idgame/analysis.hpp"
#include "oracle.hpp"

using namespace idgame;

namespace {

const Rational kLambda(3, 2);

GameConfig one_dim(std::size_t n, Coord lo, Coord hi, Rational lambda = kLambda) {
  return GameConfig{n, 1, lo, hi, lambda};
}

TrialRecord record(std::size_t net, std::size_t trial, bool converged, std::uint64_t steps) {
  TrialRecord r;
  r.network_id = net;
  r.trial_id = trial;
  r.seed = net * 100 + trial;
  r.converged = converged;
  r.steps_elapsed = steps;
  return r;
}

}  // namespace

TEST_CASE("potential values") {
  CHECK(potential(Profile::scalar({5, 5, 5}), one_dim(3, 0, 9)) == Rational(-9, 2));
  CHECK(potential(Profile::scalar({0, 1, 2}), one_dim(3, 0, 9)) == Rational(-4, 3));
  CHECK(potential(Profile::scalar({0, 2}), one_dim(2, 0, 9)) == Rational(-1));
  CHECK_THROWS_AS(potential(Profile::scalar({0, 1, 2}), Environment::networked(one_dim(3, 0, 9), three_cycle())),
                  std::domain_error);
}

TEST_CASE("potential matches the oracle and tracks each unilateral utility change") {
  Rng rng(31);
  const auto lambda = oracle::to_q(kLambda);
  // Single worked case, both sides from the oracle: 5/4.
  CHECK(oracle::utility_wellmixed({{1}, {0}}, 0, lambda) - oracle::utility_wellmixed({{0}, {0}}, 0, lambda) ==
        oracle::Q(5, 4));
  CHECK(oracle::potential({{1}, {0}}, lambda) - oracle::potential({{0}, {0}}, lambda) == oracle::Q(5, 4));
  const auto cfg2 = one_dim(2, 0, 9);
  CHECK(potential(Profile::scalar({1, 0}), cfg2) - potential(Profile::scalar({0, 0}), cfg2) == Rational(5, 4));

  for (int round = 0; round < 100; ++round) {
    const GameConfig cfg{2 + rng.below(6), 1 + rng.below(2), 0, 4, Rational(1 + static_cast<std::int64_t>(rng.below(5)), 2)};
    const Profile x = random_profile(cfg, rng);
    REQUIRE(oracle::to_q(potential(x, cfg)) == oracle::potential(oracle::points(x), oracle::to_q(cfg.lambda)));
  }
}

TEST_CASE("verify_exact_potential") {
  for (std::size_t dims : {1, 2}) {
    const auto report = verify_exact_potential(GameConfig{10, dims, 0, 5, kLambda}, 1000, 7 + dims);
    CHECK(report.samples == 1000);
    CHECK(report.passed());
  }
  // Larger populations and odd weights.
  CHECK(verify_exact_potential(GameConfig{100, 1, 0, 199, Rational(7, 3)}, 100, 3).passed());
}

TEST_CASE("a null deviation changes neither side") {
  const auto cfg = one_dim(4, 0, 5);
  const Profile x = Profile::scalar({1, 3, 3, 5});
  for (AgentId i = 0; i < 4; ++i) {
    Profile y = x;
    y.set(i, x.identity(i));
    CHECK(potential(y, cfg) - potential(x, cfg) == Rational(0));
    CHECK(utility_wellmixed(y, i, cfg) - utility_wellmixed(x, i, cfg) == Rational(0));
  }
}

TEST_CASE("potential rises strictly along well-mixed better-reply trajectories") {
  for (SearchMode mode : {SearchMode::RandomCandidate, SearchMode::SequentialScan}) {
    const auto env = Environment::well_mixed(GameConfig{15, 1, 0, 12, kLambda});
    DynamicsConfig dc;
    dc.search_mode = mode;
    dc.max_steps = 6000;
    dc.log_revisions = true;
    dc.trajectory_sample_interval = 1;
    dc.rng_seed = 4;
    const auto rec = run_trial(std::nullopt, env, dc);
    const auto audit = audit_potential_trajectory(rec, env);
    CHECK(audit.revisions == rec.revisions.size());
    CHECK(audit.revisions > 0);
    CHECK(audit.passed());
    // Constant between revisions.
    for (std::size_t k = 1; k < rec.samples.size(); ++k) {
      const bool revised = std::any_of(rec.revisions.begin(), rec.revisions.end(),
                                       [&](const Revision& r) { return r.step == rec.samples[k].step; });
      const auto before = potential(rec.samples[k - 1].profile, env);
      const auto after = potential(rec.samples[k].profile, env);
      REQUIRE((revised ? after > before : after == before));
    }
  }
}

TEST_CASE("audit flags a revision that does not raise the potential") {
  const auto env = Environment::well_mixed(one_dim(3, 0, 5));
  TrialRecord rec;
  rec.initial_profile = Profile::scalar({1, 2, 3});
  rec.revisions.push_back({1, 1, Identity{2}, Identity{5}});
  rec.final_profile = Profile::scalar({1, 5, 3});
  const auto audit = audit_potential_trajectory(rec, env);
  CHECK_FALSE(audit.passed());
  CHECK(audit.failures.size() == 1);
}

TEST_CASE("enumerate_pure_nash") {
  const auto cycle = Environment::networked(one_dim(3, 0, 3), three_cycle());
  CHECK(enumerate_pure_nash(cycle).empty());

  DirectedNetwork pair(2);
  pair.add_edge(0, 1);
  pair.add_edge(1, 0);
  const auto mutual = Environment::networked(one_dim(2, 0, 3), pair);
  const auto ne = enumerate_pure_nash(mutual);
  std::vector<Profile> expected;
  for (Coord a = 0; a <= 3; ++a) {
    for (Coord b = 0; b <= 3; ++b) {
      if (std::abs(a - b) == 1) expected.push_back(Profile::scalar({a, b}));
    }
  }
  CHECK(ne == expected);

  const auto zero = Environment::networked(one_dim(3, 0, 1, Rational(0)), three_cycle());
  const auto ne0 = enumerate_pure_nash(zero);
  CHECK(std::find(ne0.begin(), ne0.end(), Profile::scalar({0, 0, 0})) != ne0.end());
  CHECK(std::find(ne0.begin(), ne0.end(), Profile::scalar({1, 1, 1})) != ne0.end());
}

TEST_CASE("enumeration agrees with the oracle and with is_pure_nash") {
  Rng rng(12);
  for (int round = 0; round < 25; ++round) {
    const std::size_t n = 2 + rng.below(3);
    const GameConfig cfg{n, 1, 0, static_cast<Coord>(1 + rng.below(3)), Rational(1 + static_cast<std::int64_t>(rng.below(4)), 2)};
    DirectedNetwork net(n);
    for (NodeId i = 0; i < n; ++i) {
      for (NodeId j = 0; j < n; ++j) {
        if (i != j && rng.below(2) == 0) net.add_edge(i, j);
      }
    }
    const auto env = rng.below(4) == 0 ? Environment::well_mixed(cfg) : Environment::networked(cfg, net);
    const auto game = oracle::game_for(env);
    const auto ne = enumerate_pure_nash(env);
    REQUIRE(std::is_sorted(ne.begin(), ne.end(), [](const Profile& a, const Profile& b) {
      return std::lexicographical_compare(a.data().begin(), a.data().end(), b.data().begin(), b.data().end());
    }));
    std::size_t oracle_count = 0;
    for (const auto& pts : [&] {
           oracle::Points singles = oracle::domain_points(1, cfg.lo, cfg.hi);
           std::vector<oracle::Points> all{{}};
           for (std::size_t i = 0; i < n; ++i) {
             std::vector<oracle::Points> next;
             for (const auto& prefix : all) {
               for (const auto& s : singles) {
                 auto p = prefix;
                 p.push_back(s);
                 next.push_back(p);
               }
             }
             all = next;
           }
           return all;
         }()) {
      if (game.is_nash(pts)) ++oracle_count;
    }
    REQUIRE(ne.size() == oracle_count);
    for (const auto& p : ne) {
      REQUIRE(is_pure_nash(p, env));
      REQUIRE(game.is_nash(oracle::points(p)));
    }
  }
}

TEST_CASE("symmetrized three-cycle: enumeration agrees with per-profile checks") {
  const auto env = Environment::networked(one_dim(3, 0, 3), symmetrize(three_cycle()));
  const auto ne = enumerate_pure_nash(env);
  std::size_t direct = 0;
  for (Coord a = 0; a <= 3; ++a) {
    for (Coord b = 0; b <= 3; ++b) {
      for (Coord c = 0; c <= 3; ++c) direct += is_pure_nash(Profile::scalar({a, b, c}), env) ? 1 : 0;
    }
  }
  CHECK(ne.size() == direct);
}

TEST_CASE("enumeration refuses beyond its budget") {
  const auto env = Environment::well_mixed(one_dim(10, 0, 9));
  CHECK(profile_space_size(env.config()) == std::uint64_t{10'000'000'000});
  try {
    enumerate_pure_nash(env);
    FAIL("expected refusal");
  } catch (const EnumerationBudgetExceeded& e) {
    CHECK(e.required() == 10'000'000'000ULL);
    CHECK(e.budget() == kDefaultEnumerationBudget);
  }
  CHECK_THROWS_AS(enumerate_pure_nash(Environment::well_mixed(GameConfig{})), EnumerationBudgetExceeded);
  CHECK_FALSE(profile_space_size(GameConfig{}).has_value());
  CHECK_THROWS_AS(enumerate_pure_nash(Environment::networked(one_dim(3, 0, 3), three_cycle()), 63),
                  EnumerationBudgetExceeded);
}

TEST_CASE("popularity_series") {
  std::vector<ProfileSample> samples{{0, Profile::scalar({4, 4, 4})}, {200, Profile::scalar({3, 1, 3})}};
  const auto rows = popularity_series(samples);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == PopularityRow{0, Identity{4}, 3});
  CHECK(rows[1] == PopularityRow{200, Identity{1}, 1});
  CHECK(rows[2] == PopularityRow{200, Identity{3}, 2});

  // Counts at each step sum to N on a real trajectory.
  GeneratorParams gp;
  gp.rng_seed = 2;
  const auto env = Environment::networked(GameConfig{}, generate_network(gp));
  DynamicsConfig dc;
  dc.max_steps = 2000;
  dc.trajectory_sample_interval = 200;
  dc.rng_seed = 3;
  const auto rec = run_trial(std::nullopt, env, dc);
  std::map<std::uint64_t, std::size_t> totals;
  for (const auto& r : popularity_series(rec.samples)) totals[r.step] += r.count;
  CHECK(totals.size() == rec.samples.size());
  for (const auto& [step, total] : totals) CHECK(total == 100);
}

TEST_CASE("identity span and concentration onset") {
  CHECK(identity_span(Profile::scalar({3, 9, 4})) == 6);
  CHECK(identity_span(Profile(2, {Identity{0, 5}, Identity{2, 5}})) == 2);
  std::vector<ProfileSample> samples{{0, Profile::scalar({0, 50})},
                                     {200, Profile::scalar({3, 5})},
                                     {400, Profile::scalar({0, 20})},
                                     {600, Profile::scalar({1, 4})},
                                     {800, Profile::scalar({2, 2})}};
  CHECK(concentration_onset(samples, 8) == std::uint64_t{600});
  CHECK(concentration_onset(samples, 50) == std::uint64_t{0});
  samples.push_back({1000, Profile::scalar({0, 30})});
  CHECK_FALSE(concentration_onset(samples, 8).has_value());
}

TEST_CASE("aggregate counts and histogram") {
  std::vector<TrialRecord> all_fail;
  for (std::size_t n = 0; n < 3; ++n) {
    for (std::size_t t = 0; t < 4; ++t) all_fail.push_back(record(n, t, false, 30000));
  }
  const auto s1 = aggregate(all_fail);
  CHECK(s1.non_convergence_rate == Rational(1));
  CHECK(s1.histogram == std::map<std::size_t, std::size_t>{{4, 3}});
  CHECK_FALSE(s1.convergence_quantile(0.5).has_value());

  std::vector<TrialRecord> recs;
  for (std::size_t n = 0; n < 10; ++n) {
    for (std::size_t t = 0; t < 10; ++t) recs.push_back(record(n, t, n == 3 && t == 7, n == 3 && t == 7 ? 1400 : 30000));
  }
  const auto s2 = aggregate(recs);
  CHECK(s2.non_convergence_rate == Rational(99, 100));
  CHECK(s2.histogram == std::map<std::size_t, std::size_t>{{9, 1}, {10, 9}});
  std::size_t mass = 0;
  for (const auto& [k, v] : s2.histogram) mass += v;
  CHECK(mass == 10);
  CHECK(s2.convergence_times == std::vector<std::uint64_t>{1400});
  CHECK(s2.per_network.at(3).non_convergent == 9);

  // Order of records does not matter.
  Rng rng(1);
  for (int round = 0; round < 5; ++round) {
    auto shuffled = recs;
    rng.shuffle(std::span<TrialRecord>(shuffled));
    const auto s3 = aggregate(shuffled);
    CHECK(s3.histogram == s2.histogram);
    CHECK(s3.non_convergence_rate == s2.non_convergence_rate);
    CHECK(s3.convergence_times == s2.convergence_times);
    CHECK(network_stats_csv(s3) == network_stats_csv(s2));
  }
  CHECK_THROWS_AS(aggregate(std::vector<TrialRecord>{}), std::invalid_argument);
}

TEST_CASE("quantiles use nearest rank") {
  std::vector<TrialRecord> recs;
  for (std::uint64_t k = 1; k <= 10; ++k) recs.push_back(record(0, k, true, k * 200));
  const auto s = aggregate(recs);
  CHECK(s.convergence_quantile(0.5) == std::uint64_t{1000});
  CHECK(s.convergence_quantile(0.9) == std::uint64_t{1800});
  CHECK(s.convergence_quantile(0.0) == std::uint64_t{200});
  CHECK(s.convergence_quantile(1.0) == std::uint64_t{2000});
}

TEST_CASE("artifact formats") {
  std::vector<TrialRecord> recs{record(0, 0, true, 1200), record(0, 1, false, 30000), record(1, 0, false, 30000)};
  CHECK(records_csv(recs) == "network_id,trial_id,seed,converged,steps\n0,0,0,1,1200\n0,1,1,0,30000\n1,0,100,0,30000\n");
  const auto stats = aggregate(recs);
  CHECK(network_stats_csv(stats) == "network_id,trials,non_convergent\n0,2,1\n1,1,1\n");
  CHECK(histogram_csv(stats) == "non_convergent_trials,networks\n1,2\n");
  const auto j = nlohmann::json::parse(stats_json(stats));
  CHECK(j["non_convergence_rate"] == "2/3");
  CHECK(j["convergence_steps"]["median"] == 1200);
  CHECK(j["histogram"].size() == 1);
}

TEST_CASE("trajectory CSV round trip and errors") {
  std::vector<ProfileSample> samples{{100, Profile(2, {Identity{1, 2}, Identity{3, 4}})},
                                     {300, Profile(2, {Identity{0, 0}, Identity{5, 5}})}};
  const auto text = trajectory_csv(samples);
  CHECK(text.rfind("step,agent,x0,x1\n100,0,1,2\n", 0) == 0);
  CHECK(read_trajectory_csv(text) == samples);
  CHECK_THROWS_AS(read_trajectory_csv("step,agent,x0\n1,0\n"), ParseError);
  CHECK_THROWS_AS(read_trajectory_csv("bogus\n"), ParseError);
  CHECK_THROWS_AS(read_trajectory_csv("step,agent,x0\n1,1,5\n"), ParseError);
  CHECK_THROWS_AS(read_trajectory_csv(""), ParseError);
  const auto pop = popularity_csv(popularity_series(samples));
  CHECK(pop.rfind("step,x0,x1,count\n100,1,2,1\n", 0) == 0);
}
