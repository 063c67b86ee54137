// hrt_service: HTTP coordination service for closed-loop scheduling sessions.

#include <csignal>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "hrt/errors.hpp"
#include "hrt/http.hpp"
#include "hrt/service.hpp"

namespace {
hrt::HttpServer* running = nullptr;

void on_signal(int) {
  if (running) running->stop();
}
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coordination service"};
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file");
  CLI11_PARSE(app, argc, argv);

  try {
    std::optional<std::filesystem::path> file;
    if (!config_path.empty()) file = config_path;
    const auto config = hrt::load_service_config(file, [](const char* name) { return std::getenv(name); });
    hrt::CoordinationService service(config);
    hrt::HttpServer server(service);
    const int port = server.bind(config.host, config.port);
    if (port < 0) {
      std::cerr << "cannot bind " << config.host << ":" << config.port << '\n';
      return 1;
    }
    std::cout << "listening " << config.host << ":" << port << std::endl;
    running = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    server.serve();
  } catch (const hrt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
