#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "hrt/errors.hpp"
#include "hrt/index.hpp"
#include "hrt/instance_gen.hpp"
#include "hrt/io.hpp"
#include "support.hpp"

using namespace hrt;
using testing::after;
using testing::human;
using testing::task;

namespace {

ProblemInstance three_tasks() {
  ProblemInstance inst;
  inst.tasks = {task("A"), task("B"), task("C")};
  inst.tasks[1].preconditions.push_back(after("A"));
  inst.tasks[2].preconditions.push_back(after("B", 1, 5.0));
  inst.agents = {human("h1", {"A", "B", "C"}, 10.0), human("h2", {"A", "B", "C"}, 12.0)};
  return inst;
}

bool mentions(const ValidationResult& r, const std::string& text) {
  return std::any_of(r.violations.begin(), r.violations.end(),
                     [&](const std::string& v) { return v.find(text) != std::string::npos; });
}

}  // namespace

TEST_CASE("well-formed instance validates") {
  const auto r = validate_instance(three_tasks());
  CHECK(r.ok());
}

TEST_CASE("self-referencing precondition is a precedence cycle") {
  auto inst = three_tasks();
  inst.tasks[0].preconditions.push_back(after("A"));
  CHECK(mentions(validate_instance(inst), "precedence cycle"));
}

TEST_CASE("longer precedence cycle is detected") {
  auto inst = three_tasks();
  inst.tasks[0].preconditions.push_back(after("C"));
  CHECK(mentions(validate_instance(inst), "precedence cycle"));
  CHECK_THROWS_AS(InstanceIndex{inst}, ConfigError);
}

TEST_CASE("lb above ub is rejected") {
  auto inst = three_tasks();
  inst.tasks[0].duration_lb = 30.0;
  inst.tasks[0].duration_ub = 10.0;
  CHECK(mentions(validate_instance(inst), "lb > ub"));
}

TEST_CASE("range and reference violations") {
  auto inst = three_tasks();
  inst.epsilon = 1.5;
  inst.tasks[1].preconditions.push_back(after("Z"));
  inst.tasks[2].preconditions.back().wait = -1.0;
  inst.agents[0].completed_reps["A"] = -2;
  const auto r = validate_instance(inst);
  CHECK(mentions(r, "epsilon out of range"));
  CHECK(mentions(r, "dangling reference Z#1"));
  CHECK(mentions(r, "negative wait"));
  CHECK(mentions(r, "negative completed_reps"));
}

TEST_CASE("robots must carry fixed curves") {
  auto inst = three_tasks();
  inst.agents.push_back(testing::robot("r1", {"A"}, 5.0));
  CHECK(validate_instance(inst).ok());
  inst.agents.back().curve_prior["A"].x.k = 3.0;
  CHECK(mentions(validate_instance(inst), "robot curve must be fixed"));
}

TEST_CASE("iteration refs are task-ordered and printable") {
  auto inst = three_tasks();
  inst.tasks[0].iterations = 2;
  const auto refs = all_iterations(inst);
  REQUIRE(refs.size() == 4);
  CHECK(to_string(refs[0]) == "A#1");
  CHECK(to_string(refs[1]) == "A#2");
  CHECK(to_string(refs[3]) == "C#1");
}

TEST_CASE("schedule invariants") {
  const auto inst = three_tasks();
  const InstanceIndex index(inst);

  Schedule good;
  good.assignment = {{{"A", 1}, "h1"}, {{"B", 1}, "h1"}, {{"C", 1}, "h2"}};
  good.agent_orders = {{"h1", {{"A", 1}, {"B", 1}}}, {"h2", {{"C", 1}}}};
  CHECK(validate_schedule(good, inst).ok());

  SUBCASE("missing iteration") {
    Schedule s = good;
    s.assignment.erase({"C", 1});
    s.agent_orders["h2"].clear();
    CHECK(mentions(validate_schedule(s, inst), "unassigned iteration C#1"));
  }
  SUBCASE("order inconsistent with assignment") {
    Schedule s = good;
    s.agent_orders["h2"].push_back({"B", 1});
    const auto r = validate_schedule(s, inst);
    CHECK(mentions(r, "not assigned to it"));
    CHECK(mentions(r, "B#1 appears 2 times"));
  }
  SUBCASE("lane order against precedence") {
    Schedule s = good;
    s.agent_orders["h1"] = {{"B", 1}, {"A", 1}};
    CHECK(mentions(validate_schedule(s, inst), "cycle"));
    CHECK_FALSE(try_topological_order(to_plan(s, index), index).has_value());
    CHECK_THROWS_AS(topological_order(to_plan(s, index), index), CycleError);
  }
}

TEST_CASE("plan and schedule convert both ways") {
  const auto inst = three_tasks();
  const InstanceIndex index(inst);
  Plan plan;
  plan.lanes = {{0, 2}, {1}};
  const Schedule s = to_schedule(plan, index);
  CHECK(s.assignment.at({"B", 1}) == "h2");
  CHECK(to_plan(s, index) == plan);
}

TEST_CASE("deadlines include the time budget on sink iterations") {
  auto inst = three_tasks();
  inst.tasks.push_back(task("D"));
  inst.tasks[0].abs_deadline = 40.0;
  inst.time_budget = 100.0;
  for (auto& a : inst.agents) a.curve_prior["D"] = KalmanState::fixed(3.0);
  const InstanceIndex index(inst);
  REQUIRE(index.deadlines().size() == 2);
  const auto& budget = index.deadlines()[1];
  CHECK(budget.ref.kind == DeadlineRef::Kind::time_budget);
  std::vector<std::string> sinks;
  for (std::size_t it : budget.targets) sinks.push_back(to_string(index.ref(it)));
  CHECK(sinks == std::vector<std::string>{"C#1", "D#1"});
}

TEST_CASE("precondition anchored at one iteration") {
  ProblemInstance inst;
  inst.tasks = {task("A"), task("B", 3)};
  Precondition p = after("A");
  p.at = 2;
  inst.tasks[1].preconditions.push_back(p);
  inst.agents = {human("h", {"A", "B"}, 1.0)};
  const InstanceIndex index(inst);
  CHECK(index.preds(index.index_of({"B", 1})).empty());
  CHECK(index.preds(index.index_of({"B", 2})).size() == 1);
  CHECK(index.preds(index.index_of({"B", 3})).empty());
}

TEST_CASE("instance and schedule JSON round trip") {
  GenConfig cfg;
  cfg.n_tasks = 8;
  cfg.n_agents = 3;
  cfg.n_robots = 1;
  cfg.bootstrap = 20;
  cfg.rel_deadline_fraction = 0.5;
  cfg.iterations = 2;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    cfg.seed = seed;
    const auto g = generate(cfg);
    const json doc = g.instance;
    const ProblemInstance back = parse_instance(json::parse(doc.dump()));
    CHECK(json(back) == doc);

    const InstanceIndex index(g.instance);
    const Schedule s = to_schedule(edf_seed(index, DurationModel::from_priors(index)), index);
    const json sdoc = s;
    CHECK(parse_schedule(json::parse(sdoc.dump())) == s);
  }
}

TEST_CASE("malformed documents become ConfigError") {
  CHECK_THROWS_AS(parse_instance(json::parse(R"({"tasks": 3})")), ConfigError);
  CHECK_THROWS_AS(parse_schedule(json::parse(R"({"assignment": [{"ref": 1}]})")), ConfigError);
}

TEST_CASE("prior library fills missing human priors only") {
  ProblemInstance inst = three_tasks();
  inst.agents[0].curve_prior.erase("A");
  inst.agents.push_back(testing::robot("r1", {}, 1.0));
  PriorLibrary lib;
  lib["A"] = KalmanState::fixed(42.0);
  lib["B"] = KalmanState::fixed(43.0);
  apply_prior_library(inst, lib);
  CHECK(inst.agents[0].curve_prior.at("A").x.c == 42.0);
  CHECK(inst.agents[0].curve_prior.at("B").x.c == 10.0);
  CHECK(inst.agents[2].curve_prior.empty());
}
