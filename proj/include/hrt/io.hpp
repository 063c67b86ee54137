#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "hrt/model.hpp"

namespace hrt {

using json = nlohmann::json;

/// task_id -> population prior state.
using PriorLibrary = std::map<std::string, KalmanState>;

void to_json(json& j, const IterationRef& v);
void from_json(const json& j, IterationRef& v);
void to_json(json& j, const GaussianDist& v);
void from_json(const json& j, GaussianDist& v);
void to_json(json& j, const CurveParams<double>& v);
void from_json(const json& j, CurveParams<double>& v);
void to_json(json& j, const KalmanState& v);
void from_json(const json& j, KalmanState& v);
void to_json(json& j, const TaskSpec& v);
void from_json(const json& j, TaskSpec& v);
void to_json(json& j, const AgentSpec& v);
void from_json(const json& j, AgentSpec& v);
void to_json(json& j, const ProblemInstance& v);
void from_json(const json& j, ProblemInstance& v);
void to_json(json& j, const Schedule& v);
void from_json(const json& j, Schedule& v);
void to_json(json& j, const DurationObservation& v);
void from_json(const json& j, DurationObservation& v);
void to_json(json& j, const RobustnessReport& v);

std::string kind_name(AgentKind kind);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& doc);

/// Parse helpers that turn malformed documents into ConfigError.
ProblemInstance parse_instance(const json& doc);
Schedule parse_schedule(const json& doc);
PriorLibrary parse_prior_library(const json& doc);

/// Fill agents' missing curve priors from a library; robots without a prior are left untouched.
void apply_prior_library(ProblemInstance& instance, const PriorLibrary& library);

}  // namespace hrt
