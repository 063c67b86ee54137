#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "hrt/io.hpp"
#include "hrt/model.hpp"
#include "hrt/rounds.hpp"
#include "hrt/scheduler.hpp"

namespace hrt {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path data_dir = "hrt-data";
  std::optional<std::filesystem::path> prior_library;
  SearchConfig search;  // defaults for sessions that do not send one
};

/// Reads an optional JSON config file, then applies HRT_PORT, HRT_DATA_DIR, HRT_PRIOR_LIBRARY
/// (and HRT_HOST) through `getenv`. Throws ConfigError.
ServiceConfig load_service_config(const std::optional<std::filesystem::path>& file,
                                  const std::function<const char*(const char*)>& getenv);

struct Response {
  int status = 200;
  nlohmann::json body;
};

/// Session state machine behind the HTTP endpoints. Every state change is appended to a per-session
/// JSONL event log (created / scheduled / observed) before it becomes visible; on construction all
/// logs in data_dir are folded back into memory.
class CoordinationService {
 public:
  explicit CoordinationService(ServiceConfig config);
  ~CoordinationService();

  CoordinationService(const CoordinationService&) = delete;
  CoordinationService& operator=(const CoordinationService&) = delete;

  Response create_session(const nlohmann::json& body);
  Response get_schedule(const std::string& id) const;
  Response post_observations(const std::string& id, const nlohmann::json& body,
                             const std::optional<std::string>& idempotency_key);
  Response get_agents(const std::string& id) const;

  [[nodiscard]] std::vector<std::string> session_ids() const;
  /// Complete folded state, for restart comparisons. Null when unknown.
  [[nodiscard]] nlohmann::json session_state(const std::string& id) const;
  [[nodiscard]] const ServiceConfig& config() const { return config_; }

 private:
  struct Session;

  std::shared_ptr<Session> find(const std::string& id) const;
  void replay(const std::filesystem::path& log);
  std::string new_session_id();

  ServiceConfig config_;
  PriorLibrary priors_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex id_mutex_;
};

}  // namespace hrt
