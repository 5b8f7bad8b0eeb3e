#pragma once

#include <json.hpp>

#include <string>
#include <string_view>

#include "aaa/de.hpp"

namespace aaa {

std::string_view strategy_name(Strategy s);
std::string_view direction_name(Direction d);
Strategy parse_strategy(std::string_view name);

nlohmann::json config_to_json(const DEConfig& config);

/// {"records": [{generation, best_fitness, mean_fitness, queries}, ...],
///  "best_fitness", "best_text", "generations", "queries", "reached_target"}
nlohmann::json trace_to_json(const RunTrace& trace);

/// Overwrites the fields present in `j` (keys as in config_to_json);
/// unknown keys are ignored so one file can carry flags for every command.
void apply_config_json(DEConfig& config, const nlohmann::json& j);

}  // namespace aaa
