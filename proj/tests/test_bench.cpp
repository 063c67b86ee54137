#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hrt/errors.hpp"
#include "hrt/experiments.hpp"
#include "hrt/io.hpp"
#include "support.hpp"

using namespace hrt;
namespace fs = std::filesystem;

namespace {

json strip_timing(json records) {
  for (auto& r : records) {
    r.erase("bound_seconds");
    r.erase("quadrature_seconds");
    r.erase("speedup");
  }
  return records;
}

int run(const std::string& args) {
  const std::string cmd = std::string(HRT_BENCH_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hrt-bench-test-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

// Humans with exact learning curves and no uncertainty.
ProblemInstance learning_instance() {
  ProblemInstance inst;
  inst.tasks = {testing::task("A"), testing::task("B"), testing::task("C"), testing::task("D")};
  inst.tasks[2].preconditions.push_back(testing::after("A"));
  inst.epsilon = 0.05;
  for (const auto* id : {"h1", "h2"}) {
    AgentSpec a;
    a.agent_id = id;
    for (const auto& t : inst.tasks) {
      KalmanState s;
      s.x = {20.0 + (id[1] - '0') * 3.0, 30.0, 0.6};
      a.curve_prior[t.task_id] = s;
    }
    inst.agents.push_back(a);
  }
  return inst;
}

}  // namespace

TEST_CASE("speedup report is deterministic apart from timings") {
  SpeedupConfig cfg;
  cfg.sizes = {8, 12};
  cfg.trials = 1;
  cfg.bound_repeats = 1;
  const auto a = cmd_speedup(cfg);
  const auto b = cmd_speedup(cfg);
  CHECK(a.records.size() == 2);
  CHECK(strip_timing(a.records) == strip_timing(b.records));
  for (const auto& r : a.records) CHECK(r.at("speedup").get<double>() > 0.0);
  CHECK(a.summary.at("per_size").size() == 2);
}

TEST_CASE("deterministic durations have no conservatism") {
  ConservatismConfig cfg;
  cfg.trials = 3;
  cfg.mc_samples = 200;
  cfg.gen.n_tasks = 10;
  cfg.gen.noise_fraction = 0.0;
  const auto r = cmd_conservatism(cfg);
  REQUIRE(r.records.size() == 3);
  for (const auto& rec : r.records) CHECK(rec.at("percent_added").get<double>() == 0.0);
  CHECK(r.summary.at("never_negative") == true);
}

TEST_CASE("conservatism is never negative on noisy instances") {
  ConservatismConfig cfg;
  cfg.trials = 3;
  cfg.mc_samples = 20000;
  cfg.gen.n_tasks = 15;
  const auto r = cmd_conservatism(cfg);
  for (const auto& rec : r.records) CHECK(rec.at("percent_added").get<double>() >= 0.0);
}

TEST_CASE("kalman experiment without noise") {
  KalmanConfig cfg;
  cfg.trials = 5;
  cfg.prior_agents = 10;
  cfg.prior_iterations = 8;
  cfg.bootstrap = 30;
  cfg.gen.noise_fraction = 0.0;
  cfg.gen.c.agent = Component::point(20.0);
  cfg.gen.c.joint = Component::point(10.0);
  cfg.gen.k.agent = Component::point(10.0);
  cfg.gen.k.joint = Component::point(5.0);
  cfg.gen.beta.agent = Component::point(0.4);
  cfg.gen.beta.joint = Component::point(0.4);
  const auto r = cmd_kalman(cfg);
  REQUIRE(r.records.size() == 5);
  for (const auto& rec : r.records) {
    CHECK(rec.at("population_error").get<double>() < 0.5);
    CHECK(rec.at("adaptive_error").get<double>() <= rec.at("population_error").get<double>() + 0.5);
  }
}

TEST_CASE("kalman experiment is deterministic") {
  KalmanConfig cfg;
  cfg.trials = 3;
  cfg.prior_agents = 10;
  cfg.bootstrap = 20;
  CHECK(cmd_kalman(cfg).records == cmd_kalman(cfg).records);
}

TEST_CASE("a single-round session schedules once") {
  SessionConfig cfg;
  cfg.rounds = 1;
  cfg.search.max_generations = 3;
  const auto r = cmd_session(cfg);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].at("round") == 1);
  CHECK(r.summary.at("lambda_trace") == json::array({0.0}));
}

TEST_CASE("exploit on a noiseless learning instance never slows down") {
  const fs::path path = scratch("learning.json");
  write_json_file(path, learning_instance());
  SessionConfig cfg;
  cfg.instance_path = path.string();
  cfg.gen.noise_fraction = 0.0;
  cfg.rounds = 5;
  const auto r = cmd_session(cfg);
  REQUIRE(r.records.size() == 5);
  for (std::size_t k = 1; k < r.records.size(); ++k) {
    CHECK(r.records[k].at("realized_makespan").get<double>() <=
          r.records[k - 1].at("realized_makespan").get<double>() + 1e-9);
  }
  CHECK(r.records[0].at("realized_makespan").get<double>() ==
        doctest::Approx(r.records[0].at("z1").get<double>()));
}

TEST_CASE("session reports are deterministic") {
  SessionConfig cfg;
  cfg.trials = 2;
  cfg.rounds = 3;
  cfg.search.max_generations = 5;
  cfg.strategy.kind = StrategyKind::annealed;
  const auto a = cmd_session(cfg);
  const auto b = cmd_session(cfg);
  CHECK(a.records == b.records);
  CHECK(a.summary == b.summary);
  CHECK(a.records.size() == 6);
}

TEST_CASE("reports serialize to JSON and CSV") {
  ExperimentReport r;
  r.experiment = "demo";
  r.trials = 2;
  r.records = {{{"trial", 0}, {"x", 1.5}}, {{"trial", 1}, {"y", "a,\"b\""}}};
  r.summary = {{"x", 1.5}};
  const std::string csv = report_to_csv(r);
  std::istringstream lines(csv);
  std::string header, first, second;
  std::getline(lines, header);
  std::getline(lines, first);
  std::getline(lines, second);
  CHECK(header == "trial,x,y");
  CHECK(first == "0,1.5,");
  CHECK(second == "1,,\"a,\"\"b\"\"\"");
  const json doc = report_to_json(r);
  CHECK(doc.at("experiment") == "demo");
  CHECK(doc.at("records").size() == 2);
  CHECK(report_table(r).find("x") != std::string::npos);
  CHECK(median({3.0, 1.0, 2.0, 10.0}) == 2.5);
}

TEST_CASE("config documents fill defaults and reject bad values") {
  const auto s = session_config(json::parse(R"({"rounds": 3, "strategy": {"kind": "annealed"}})"));
  CHECK(s.rounds == 3);
  CHECK(s.strategy.kind == StrategyKind::annealed);
  CHECK(s.gen.n_tasks == 6);
  const auto k = kalman_config(json::parse(R"({"gen": {"noise_fraction": 0.0}})"));
  CHECK(k.trials == 50);
  CHECK(k.gen.noise_fraction == 0.0);
  CHECK_THROWS_AS(session_config(json::parse(R"({"search": {"population_size": 0}})")), ConfigError);
  CHECK_THROWS_AS(session_config(json::parse(R"({"strategy": {"kind": "random"}})")), ConfigError);
  CHECK_THROWS_AS(speedup_config(json::parse(R"({"trials": "many"})")), ConfigError);
}

TEST_CASE("CLI exit codes and outputs") {
  CHECK(run("--help") == 0);
  CHECK(run("") == 2);
  CHECK(run("speedup --trials many") == 2);
  CHECK(run("session --strategy random") == 2);
  CHECK(run("kalman --config /nonexistent/config.json") == 2);

  const fs::path bad = scratch("bad.json");
  std::ofstream(bad) << R"({"search": {"elite_fraction": 3}})";
  CHECK(run("session --config " + bad.string()) == 2);

  const fs::path cfg = scratch("small.json");
  std::ofstream(cfg) << R"({"prior_agents": 5, "prior_iterations": 5, "bootstrap": 10})";
  const fs::path out = scratch("kalman-report");
  CHECK(run("kalman --trials 2 --seed 3 --config " + cfg.string() + " --out " + out.string()) == 0);
  fs::path json_out = out, csv_out = out;
  json_out += ".json";
  csv_out += ".csv";
  REQUIRE(fs::exists(json_out));
  REQUIRE(fs::exists(csv_out));
  const json doc = read_json_file(json_out);
  CHECK(doc.at("trials") == 2);
  CHECK(doc.at("seed") == 3);
  CHECK(doc.at("records").size() == 2);

  const fs::path gen = scratch("generated");
  CHECK(run("generate --seed 4 --out " + gen.string()) == 0);
  fs::path inst = gen, truth = gen;
  inst += ".json";
  truth += ".truth.json";
  CHECK(validate_instance(parse_instance(read_json_file(inst))).ok());
  CHECK(read_json_file(truth).at("oracle_only") == true);
  fs::remove_all(cfg.parent_path());
}
