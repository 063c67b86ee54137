// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "hrt/errors.hpp"
#include "hrt/experiments.hpp"
#include "hrt/instance_gen.hpp"
#include "hrt/io.hpp"
#include "hrt/oracles.hpp"
#include "hrt/scheduler.hpp"
#include "hrt/stochastic.hpp"
#include "support.hpp"

#include <httplib.h>

using namespace hrt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

Outcome dominance() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20241);
  std::uniform_int_distribution<int> count(2, 10);
  std::uniform_real_distribution<double> mu(0.0, 300.0), sd(0.05, 40.0);
  double worst = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<GaussianDist> in(count(rng));
    for (auto& x : in) x = {mu(rng), sd(rng)};
    worst = std::min(worst, testing::dominance_slack(max_gaussian_ub(in), in, 1000));
  }
  const double secs = seconds_since(start);
  return {worst >= -1e-9 && secs < 10.0, "min slack " + fmt(worst) + ", " + fmt(secs, 3) + " s"};
}

Outcome sum_vs_convolution() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> mu(1.0, 300.0), sd(0.1, 40.0);
  double worst_mean = 0.0, worst_sd = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const GaussianDist a{mu(rng), sd(rng)}, b{mu(rng), sd(rng)};
    const auto closed = sum_gaussian(a, b);
    const auto numeric = testing::convolve_moments(a, b, 600);
    worst_mean = std::max(worst_mean, std::abs(closed.mean - numeric.mean) / numeric.mean);
    worst_sd = std::max(worst_sd, std::abs(closed.stddev - numeric.stddev) / numeric.stddev);
  }
  return {worst_mean <= 0.005 && worst_sd <= 0.005,
          "max rel err mean " + fmt(worst_mean) + ", stddev " + fmt(worst_sd)};
}

Outcome speedup() {
  const auto report = cmd_speedup(SpeedupConfig{});
  std::vector<double> ratios;
  std::string detail;
  for (const auto& s : report.summary.at("per_size")) {
    ratios.push_back(s.at("median_speedup").get<double>());
    detail += std::to_string(s.at("size").get<int>()) + " tasks " + fmt(ratios.back()) + "x; ";
  }
  bool ok = ratios.size() == 3 && ratios[0] >= 50.0;
  for (std::size_t k = 1; k < ratios.size(); ++k) ok = ok && ratios[k] > ratios[k - 1];
  return {ok, detail};
}

Outcome conservatism() {
  const auto report = cmd_conservatism(ConservatismConfig{});
  const auto& pct = report.summary.at("percent_added");
  const double med = pct.at("median").get<double>(), lo = pct.at("min").get<double>();
  return {report.records.size() == 20 && med <= 25.0 && lo >= 0.0,
          "median " + fmt(med) + "%, min " + fmt(lo) + "%, mean " + fmt(pct.at("mean").get<double>()) + "%"};
}

Outcome robustness() {
  const double floor = 0.95 - 3.0 * std::sqrt(0.95 * 0.05 / 1e5);
  GenConfig gen;
  gen.n_tasks = 20;
  gen.fit_priors = false;
  gen.with_time_budget = false;
  gen.rel_deadline_fraction = 0.2;
  SearchConfig search;
  search.time_limit.reset();
  search.max_generations = 10;
  search.population_size = 32;
  int accepted = 0, attempts = 0, deadlines = 0;
  double worst = 1.0;
  for (std::uint64_t seed = 1; accepted < 20 && attempts < 200; ++seed, ++attempts) {
    gen.seed = seed;
    const auto g = generate(gen);
    const InstanceIndex index(g.instance);
    if (index.deadlines().empty()) continue;
    const auto model = truth_model(index, g.truth);
    search.seed = seed;
    const auto r = evolve(index, model, search);
    if (!r.evaluation.robust) continue;
    ++accepted;
    deadlines += static_cast<int>(index.deadlines().size());
    const auto mc = monte_carlo_oracle(r.best, index, model.durations(r.best, index), 100000, seed * 31 + 1);
    worst = std::min(worst, mc.all_success);
  }
  return {accepted == 20 && worst >= floor, std::to_string(accepted) + " robust schedules (" + std::to_string(deadlines) +
                                                " deadlines), worst success " +
                                                fmt(worst, 5) + " (floor " + fmt(floor, 5) + ")"};
}

Outcome kalman() {
  const auto report = cmd_kalman(KalmanConfig{});
  const double pop = report.summary.at("population_error").at("median").get<double>();
  const double adapt = report.summary.at("adaptive_error").at("median").get<double>();
  const double frac = report.summary.at("improvement_fraction").get<double>();
  return {adapt < pop && frac >= 0.6,
          "median error " + fmt(adapt) + " s vs " + fmt(pop) + " s, improved in " + fmt(frac * 100) + "% of trials"};
}

Outcome parity() {
  int within = 0, monotone = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    GenConfig gen;
    gen.seed = seed;
    gen.n_agents = 2;
    gen.fit_priors = false;
    gen.deadline_fraction = 0.3;
    gen.n_tasks = seed % 2 ? 3 : 5;
    gen.iterations = seed % 2 ? 2 : 1;
    const auto g = generate(gen);
    const InstanceIndex index(g.instance);
    const auto model = truth_model(index, g.truth);

    std::optional<Evaluation> best;
    testing::enumerate_plans(index, [&](const Plan& plan) {
      const auto e = objective(plan, index, model, 0.0);
      if (!best || ranks_before(e, *best)) best = e;
    });
    SearchConfig search;
    search.seed = seed;
    search.time_limit.reset();
    search.max_generations = 30;
    const auto r = evolve(index, model, search);
    const double gap = r.evaluation.value.z1 / best->value.z1 - 1.0;
    worst = std::max(worst, gap);
    within += (gap <= 0.05 && r.evaluation.robust == best->robust) ? 1 : 0;
    bool ok = true;
    for (std::size_t k = 1; k < r.history.size(); ++k) ok = ok && r.history[k].z <= r.history[k - 1].z + 1e-12;
    monotone += ok ? 1 : 0;
  }
  return {within == 20 && monotone == 20, std::to_string(within) + "/20 within 5% (worst gap " +
                                              fmt(worst * 100) + "%), " + std::to_string(monotone) +
                                              "/20 non-increasing traces"};
}

Outcome strategies() {
  SessionConfig cfg;
  cfg.trials = 20;
  cfg.strategy.kind = StrategyKind::exploit;
  const double exploit = cmd_session(cfg).summary.at("mean_z2").get<double>();
  cfg.strategy.kind = StrategyKind::explore_exploit;
  const double explore = cmd_session(cfg).summary.at("mean_z2").get<double>();
  SessionConfig annealed;
  annealed.strategy.kind = StrategyKind::annealed;
  annealed.search.max_generations = 3;
  const auto trace = cmd_session(annealed).summary.at("lambda_trace").get<std::vector<double>>();
  const bool trace_ok = trace == std::vector<double>{50, 50, 50, 0, 0};
  std::string t;
  for (double l : trace) t += (t.empty() ? "" : ",") + fmt(l);
  return {explore < exploit && trace_ok,
          "mean z2 explore " + fmt(explore) + " vs exploit " + fmt(exploit) + "; annealed [" + t + "]"};
}

// A child hrt_service process reporting its port on stdout.
struct ServiceProcess {
  pid_t pid = -1;
  int port = -1;

  ServiceProcess(const fs::path& data_dir, const fs::path& log) {
    int fds[2];
    if (::pipe(fds) != 0) throw Error("pipe failed");
    pid = ::fork();
    if (pid == 0) {
      ::dup2(fds[1], STDOUT_FILENO);
      const int err = ::open(log.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
      if (err >= 0) ::dup2(err, STDERR_FILENO);
      ::close(fds[0]);
      ::setenv("HRT_PORT", "0", 1);
      ::setenv("HRT_HOST", "127.0.0.1", 1);
      ::setenv("HRT_DATA_DIR", data_dir.c_str(), 1);
      ::execl(HRT_SERVICE_PATH, HRT_SERVICE_PATH, static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(fds[1]);
    FILE* out = ::fdopen(fds[0], "r");
    char line[256];
    while (std::fgets(line, sizeof line, out)) {
      const std::string s(line);
      if (s.rfind("listening ", 0) == 0) {
        port = std::stoi(s.substr(s.rfind(':') + 1));
        break;
      }
    }
    std::fclose(out);
    if (port <= 0) throw Error("service did not report a port");
  }

  void kill_hard() {
    if (pid <= 0) return;
    ::kill(pid, SIGKILL);
    ::waitpid(pid, nullptr, 0);
    pid = -1;
  }

  void terminate() {
    if (pid <= 0) return;
    ::kill(pid, SIGTERM);
    ::waitpid(pid, nullptr, 0);
    pid = -1;
  }

  ~ServiceProcess() { kill_hard(); }
};

struct Http {
  int port;

  std::pair<int, json> get(const std::string& path) const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(120, 0);
    auto res = c.Get(path);
    if (!res) throw Error("GET " + path + " failed");
    return {res->status, json::parse(res->body)};
  }

  std::pair<int, json> post(const std::string& path, const json& body, const std::string& key = "") const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(120, 0);
    httplib::Headers headers;
    if (!key.empty()) headers.emplace("Idempotency-Key", key);
    auto res = c.Post(path, headers, body.dump(), "application/json");
    if (!res) throw Error("POST " + path + " failed");
    return {res->status, json::parse(res->body)};
  }
};

Outcome service_contract() {
  const fs::path dir = fs::temp_directory_path() / ("hrt-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);

  GenConfig gen;
  gen.seed = 11;
  gen.n_tasks = 6;
  gen.n_agents = 3;
  gen.n_robots = 1;
  gen.bootstrap = 50;
  const auto g = generate(gen);
  std::mt19937_64 rng(5);

  std::string failures;
  auto require = [&](bool ok, const std::string& what) {
    if (!ok && failures.empty()) failures = what;
    return ok;
  };

  auto service = std::make_unique<ServiceProcess>(dir / "data", dir / "service.log");
  Http http{service->port};
  json body = {{"instance", g.instance},
               {"strategy", {{"kind", "annealed"}, {"total_rounds", 5}}},
               {"search", {{"time_limit", nullptr}, {"max_generations", 10}, {"population_size", 32}, {"seed", 3}}}};
  auto [status, doc] = http.post("/sessions", body);
  require(status == 201, "create returned " + std::to_string(status));
  const std::string id = doc.value("session_id", "");
  int rounds_done = 0;
  bool restarted = false;

  for (int round = 1; round <= 5 && failures.empty(); ++round) {
    const auto [gs, current] = http.get("/sessions/" + id + "/schedule");
    require(gs == 200 && current.at("round") == round, "round " + std::to_string(round) + " schedule");
    const Schedule schedule = parse_schedule(current.at("schedule"));
    require(validate_schedule(schedule, g.instance).ok(), "coverage in round " + std::to_string(round));

    json obs = json::array();
    for (const auto& e : current.at("expected_observations")) {
      const double d = sample_execution(g.truth, e.at("agent_id"), e.at("task_id"), e.at("iteration_index"), rng);
      obs.push_back({{"agent_id", e.at("agent_id")},
                     {"task_id", e.at("task_id")},
                     {"iteration_index", e.at("iteration_index")},
                     {"observed_duration", d}});
    }
    const json submit = {{"observations", obs}};
    const std::string key = "round-" + std::to_string(round);
    const auto first = http.post("/sessions/" + id + "/observations", submit, key);
    const auto replay = http.post("/sessions/" + id + "/observations", submit, key);
    require(first.first == 200, "observations in round " + std::to_string(round));
    require(replay == first, "idempotent replay in round " + std::to_string(round));
    ++rounds_done;

    if (round == 3) {
      const json schedule_before = http.get("/sessions/" + id + "/schedule").second;
      const json agents_before = http.get("/sessions/" + id + "/agents").second;
      service->kill_hard();
      service = std::make_unique<ServiceProcess>(dir / "data", dir / "service.log");
      http.port = service->port;
      require(http.get("/sessions/" + id + "/schedule").second == schedule_before, "schedule after restart");
      require(http.get("/sessions/" + id + "/agents").second == agents_before, "agents after restart");
      require(http.post("/sessions/" + id + "/observations", submit, key) == first, "replay after restart");
      restarted = true;
    }
  }
  const auto final_doc = http.get("/sessions/" + id + "/schedule").second;
  require(final_doc.value("completed", false), "session not completed");
  require(http.post("/sessions/" + id + "/observations", json{{"observations", json::array()}}).first == 410,
          "post after completion");
  service->terminate();
  fs::remove_all(dir);

  return {failures.empty() && restarted && rounds_done == 5,
          failures.empty() ? "5 rounds, coverage and replay held, state equal after SIGKILL restart"
                           : "failed: " + failures};
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "max bound dominance", dominance},
      {2, "closed-form sum vs convolution", sum_vs_convolution},
      {3, "speedup over quadrature", speedup},
      {4, "conservatism", conservatism},
      {5, "robustness guarantee", robustness},
      {6, "adaptive curve improvement", kalman},
      {7, "optimizer parity", parity},
      {8, "strategy behavior", strategies},
      {9, "service contract", service_contract},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << c.number << "  " << c.name << "  (" << o.detail << ")  ["
              << fmt(seconds_since(start), 3) << " s]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
