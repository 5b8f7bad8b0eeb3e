#include "aaa/config.hpp"

#include "aaa/errors.hpp"

namespace aaa {

std::string_view strategy_name(Strategy s) { return s == Strategy::Rand1 ? "rand1" : "current_to_best"; }

std::string_view direction_name(Direction d) { return d == Direction::Maximize ? "maximize" : "minimize"; }

Strategy parse_strategy(std::string_view name) {
  if (name == "rand1") return Strategy::Rand1;
  if (name == "current_to_best") return Strategy::CurrentToBest;
  throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

nlohmann::json config_to_json(const DEConfig& c) {
  nlohmann::json j = {
      {"np", c.np},
      {"f", c.f},
      {"cr", c.cr},
      {"eta", c.eta},
      {"generations", c.max_generations},
      {"seed", c.seed},
      {"strategy", strategy_name(c.strategy)},
      {"direction", direction_name(c.direction)},
      {"epsilon", c.epsilon},
      {"force_one_dimension", c.force_one_dimension},
      {"jobs", c.jobs},
  };
  j["target_fitness"] = c.target_fitness ? nlohmann::json(*c.target_fitness) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json trace_to_json(const RunTrace& trace) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : trace.records)
    records.push_back({{"generation", r.generation},
                       {"best_fitness", r.best_fitness},
                       {"mean_fitness", r.mean_fitness},
                       {"queries", r.queries}});
  nlohmann::json j = {{"records", records},
                      {"generations", trace.generations()},
                      {"queries", trace.queries()},
                      {"reached_target", trace.reached_target},
                      {"best_fitness", nullptr},
                      {"best_text", nullptr}};
  if (trace.best.fitness) j["best_fitness"] = *trace.best.fitness;
  if (trace.best.output_text) j["best_text"] = *trace.best.output_text;
  return j;
}

void apply_config_json(DEConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    if (j.contains("np")) c.np = j["np"].get<int>();
    if (j.contains("f")) c.f = j["f"].get<double>();
    if (j.contains("cr")) c.cr = j["cr"].get<double>();
    if (j.contains("eta")) c.eta = j["eta"].get<double>();
    if (j.contains("generations")) c.max_generations = j["generations"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("epsilon")) c.epsilon = j["epsilon"].get<double>();
    if (j.contains("force_one_dimension")) c.force_one_dimension = j["force_one_dimension"].get<bool>();
    if (j.contains("jobs")) c.jobs = j["jobs"].get<int>();
    if (j.contains("target_fitness")) {
      if (j["target_fitness"].is_null())
        c.target_fitness.reset();
      else
        c.target_fitness = j["target_fitness"].get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

}  // namespace aaa
