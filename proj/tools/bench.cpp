// bench: desk-scale experiments and simulated scheduling sessions.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hrt/errors.hpp"
#include "hrt/experiments.hpp"
#include "hrt/io.hpp"

namespace {

struct Options {
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::string out;
  std::string config;
  std::string strategy;
  std::optional<int> rounds;
};

nlohmann::json load_config(const Options& opt) {
  if (opt.config.empty()) return nlohmann::json::object();
  return hrt::read_json_file(opt.config);
}

template <typename Cfg>
void apply_common(const Options& opt, Cfg& cfg) {
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.trials) cfg.trials = *opt.trials;
}

void emit(const hrt::ExperimentReport& report, const Options& opt) {
  std::cout << hrt::report_table(report);
  if (opt.out.empty()) return;
  std::filesystem::path json_path = opt.out;
  if (json_path.extension() != ".json") json_path += ".json";
  hrt::write_json_file(json_path, hrt::report_to_json(report));
  std::filesystem::path csv_path = json_path;
  csv_path.replace_extension(".csv");
  std::ofstream csv(csv_path);
  if (!csv) throw hrt::ConfigError("cannot write " + csv_path.string());
  csv << hrt::report_to_csv(report);
  std::cout << "wrote " << json_path.string() << " and " << csv_path.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scheduling experiments: speedup, conservatism, kalman, session"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", opt.seed, "RNG seed");
    sub->add_option("--trials", opt.trials, "number of trials");
    sub->add_option("--out", opt.out, "report path; writes PATH.json and PATH.csv");
    sub->add_option("--config", opt.config, "JSON config file");
  };
  auto* speedup = app.add_subcommand("speedup", "bound propagation vs. quadrature wall time");
  auto* conservatism = app.add_subcommand("conservatism", "bound quantile vs. Monte Carlo quantile");
  auto* kalman = app.add_subcommand("kalman", "frozen prior vs. adaptive filter prediction error");
  auto* session = app.add_subcommand("session", "closed-loop simulated scheduling rounds");
  auto* generate = app.add_subcommand("generate", "write a generated instance and its hidden curves");
  for (auto* sub : {speedup, conservatism, kalman, session, generate}) add_common(sub);
  session->add_option("--strategy", opt.strategy, "exploit | explore_exploit | annealed");
  session->add_option("--rounds", opt.rounds, "rounds per session");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const auto doc = load_config(opt);
    if (speedup->parsed()) {
      auto cfg = hrt::speedup_config(doc);
      apply_common(opt, cfg);
      emit(hrt::cmd_speedup(cfg), opt);
    } else if (conservatism->parsed()) {
      auto cfg = hrt::conservatism_config(doc);
      apply_common(opt, cfg);
      emit(hrt::cmd_conservatism(cfg), opt);
    } else if (kalman->parsed()) {
      auto cfg = hrt::kalman_config(doc);
      apply_common(opt, cfg);
      emit(hrt::cmd_kalman(cfg), opt);
    } else if (session->parsed()) {
      auto cfg = hrt::session_config(doc);
      apply_common(opt, cfg);
      if (!opt.strategy.empty()) cfg.strategy.kind = hrt::parse_strategy(opt.strategy);
      if (opt.rounds) cfg.rounds = *opt.rounds;
      emit(hrt::cmd_session(cfg), opt);
    } else if (generate->parsed()) {
      hrt::GenConfig cfg;
      hrt::from_json(doc, cfg);
      if (opt.seed) cfg.seed = *opt.seed;
      const auto g = hrt::generate(cfg);
      const std::filesystem::path base = opt.out.empty() ? "instance" : opt.out;
      std::filesystem::path truth = base;
      truth += ".truth.json";
      std::filesystem::path inst = base;
      inst += ".json";
      hrt::write_json_file(inst, g.instance);
      hrt::write_json_file(truth, hrt::truth_to_json(g.truth));
      std::cout << "wrote " << inst.string() << " and " << truth.string() << " (oracle only)\n";
    }
  } catch (const hrt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const hrt::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
