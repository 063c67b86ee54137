#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "hrt/errors.hpp"
#include "hrt/instance_gen.hpp"
#include "hrt/io.hpp"

using namespace hrt;

namespace {

GenConfig quick(std::uint64_t seed) {
  GenConfig cfg;
  cfg.seed = seed;
  cfg.bootstrap = 20;
  return cfg;
}

}  // namespace

TEST_CASE("same seed gives byte-identical output") {
  auto cfg = quick(42);
  cfg.n_robots = 1;
  cfg.rel_deadline_fraction = 0.3;
  const auto a = generate(cfg);
  const auto b = generate(cfg);
  CHECK(json(a.instance).dump() == json(b.instance).dump());
  CHECK(truth_to_json(a.truth).dump() == truth_to_json(b.truth).dump());
  cfg.seed = 43;
  CHECK(json(generate(cfg).instance).dump() != json(a.instance).dump());
}

TEST_CASE("about a fifth of tasks carry deadlines") {
  GenConfig cfg;
  cfg.n_tasks = 50;
  cfg.fit_priors = false;
  double total = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    cfg.seed = seed;
    const auto g = generate(cfg);
    for (const auto& t : g.instance.tasks) total += t.abs_deadline ? 1.0 : 0.0;
  }
  const double average = total / 100.0;
  CHECK(average >= 7.0);
  CHECK(average <= 13.0);
}

TEST_CASE("point-mass components give identical curves") {
  GenConfig cfg;
  cfg.seed = 3;
  cfg.n_tasks = 6;
  cfg.fit_priors = false;
  cfg.with_time_budget = true;
  cfg.c = {Component::point(10), Component::point(5), Component::point(1)};
  cfg.k = {Component::point(4), Component::point(3), Component::point(2)};
  cfg.beta = {Component::point(0.3), Component::point(0.3), Component::point(0.3)};
  const auto g = generate(cfg);
  REQUIRE(g.truth.curves.size() == 18);
  for (const auto& [key, curve] : g.truth.curves) {
    CHECK(curve.curve.c == doctest::Approx(16.0));
    CHECK(curve.curve.k == doctest::Approx(9.0));
    CHECK(curve.curve.beta == doctest::Approx(0.3));
    CHECK(curve.noise_fraction == doctest::Approx(0.08));
  }
  const double m = 16.0 + 9.0 * std::exp(-0.3);
  const double expected = (6.0 * m + 3.0 * std::sqrt(6.0) * 0.08 * m) / 3.0;
  REQUIRE(g.instance.time_budget);
  CHECK(*g.instance.time_budget == doctest::Approx(expected));
}

TEST_CASE("generated instances are valid and acyclic") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    GenConfig cfg;
    cfg.seed = seed;
    cfg.n_tasks = 1 + int(seed * 7 % 60);
    cfg.n_agents = 1 + int(seed % 3);
    cfg.n_robots = int(seed % 2) * (cfg.n_agents > 1 ? 1 : 0);
    cfg.iterations = 1 + int(seed % 3);
    cfg.rel_deadline_fraction = 0.2;
    cfg.fit_priors = seed % 5 == 0;
    cfg.bootstrap = 10;
    const auto g = generate(cfg);
    const auto r = validate_instance(g.instance);
    CHECK_MESSAGE(r.ok(), "seed " << seed << ": " << (r.ok() ? "" : r.violations.front()));
    CHECK(g.instance.tasks.size() == std::size_t(cfg.n_tasks));
    CHECK(g.instance.agents.size() == std::size_t(cfg.n_agents));
    std::set<std::string> earlier;
    for (const auto& t : g.instance.tasks) {
      CHECK(t.preconditions.size() <= 3);
      for (const auto& p : t.preconditions) {
        CHECK(earlier.count(p.ref.task) == 1);
        CHECK((p.wait == 0.0 || (p.wait >= 5.0 && p.wait <= 30.0)));
      }
      earlier.insert(t.task_id);
    }
    for (const auto& [key, curve] : g.truth.curves) {
      CHECK(curve.curve.c > 0.0);
      CHECK(curve.curve.k >= 0.0);
      CHECK(curve.curve.beta >= 0.0);
    }
  }
}

TEST_CASE("fitted priors cover every human task and robots are fixed") {
  auto cfg = quick(5);
  cfg.n_tasks = 8;
  cfg.n_robots = 1;
  const auto g = generate(cfg);
  for (const auto& a : g.instance.agents) {
    CHECK(a.curve_prior.size() == 8);
    for (const auto& [task, prior] : a.curve_prior) {
      if (a.kind == AgentKind::robot) {
        CHECK(prior.x.k == 0.0);
        CHECK(prior.P.isZero());
        CHECK(prior.x.c == doctest::Approx(g.truth.at(a.agent_id, task).curve.c));
      } else {
        CHECK(prior.x.c > 0.0);
      }
    }
  }
}

TEST_CASE("sample_execution properties") {
  GenConfig cfg;
  cfg.seed = 6;
  cfg.n_tasks = 3;
  cfg.n_robots = 1;
  cfg.fit_priors = false;
  const auto g = generate(cfg);
  std::mt19937_64 rng(1);

  SUBCASE("sample mean converges") {
    const auto& curve = g.truth.at("A1", "T001");
    double sum = 0.0;
    const int n = 100000;
    for (int s = 0; s < n; ++s) sum += sample_execution(g.truth, "A1", "T001", 3, rng);
    CHECK(sum / n == doctest::Approx(curve.mean(3)).epsilon(0.01));
  }
  SUBCASE("robots are constant") {
    const double first = sample_execution(g.truth, "A3", "T002", 1, rng);
    for (int i = 2; i < 30; ++i) CHECK(sample_execution(g.truth, "A3", "T002", i, rng) == first);
  }
  SUBCASE("no noise returns the curve mean") {
    GroundTruth t;
    t.curves[{"a", "t"}] = {{10.0, 20.0, 0.5}, 0.0};
    CHECK(sample_execution(t, "a", "t", 2, rng) == doctest::Approx(10.0 + 20.0 * std::exp(-1.0)));
  }
  SUBCASE("floor at a tenth of a second") {
    GroundTruth t;
    t.curves[{"a", "t"}] = {{0.1, 0.0, 0.0}, 5.0};
    for (int s = 0; s < 1000; ++s) CHECK(sample_execution(t, "a", "t", 1, rng) >= 0.1);
  }
}

TEST_CASE("invalid configs are rejected") {
  auto expect_invalid = [](auto mutate_cfg) {
    GenConfig cfg;
    mutate_cfg(cfg);
    CHECK_THROWS_AS(generate(cfg), ConfigError);
  };
  expect_invalid([](GenConfig& c) { c.n_tasks = 0; });
  expect_invalid([](GenConfig& c) { c.n_agents = 0; });
  expect_invalid([](GenConfig& c) { c.deadline_fraction = 1.5; });
  expect_invalid([](GenConfig& c) { c.wait_probability = -0.1; });
  expect_invalid([](GenConfig& c) { c.wait_min = 40.0; });
  expect_invalid([](GenConfig& c) { c.n_robots = 5; });
  expect_invalid([](GenConfig& c) { c.epsilon = 1.0; });
}

TEST_CASE("ground truth and config serialize") {
  const auto g = generate(quick(9));
  const json doc = truth_to_json(g.truth);
  CHECK(doc.at("oracle_only") == true);
  const GroundTruth back = truth_from_json(json::parse(doc.dump()));
  CHECK(truth_to_json(back) == doc);

  GenConfig cfg;
  cfg.n_tasks = 11;
  cfg.c.joint = Component::point(3.0);
  json j = cfg;
  GenConfig parsed;
  from_json(j, parsed);
  CHECK(json(parsed) == j);

  GenConfig partial;
  partial.n_agents = 2;
  from_json(json{{"n_tasks", 7}}, partial);
  CHECK(partial.n_tasks == 7);
  CHECK(partial.n_agents == 2);
}
