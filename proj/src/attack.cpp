#include "aaa/attack.hpp"

#include <json.hpp>

#include <map>
#include <mutex>
#include <ostream>
#include <shared_mutex>

#include "aaa/attend.hpp"
#include "aaa/config.hpp"
#include "aaa/fsutil.hpp"

namespace aaa {

namespace {

/// Caption -> embedding; concurrent readers, serialized inserts.
class EmbeddingCache {
 public:
  explicit EmbeddingCache(TextEmbedder& embedder) : embedder_(embedder) {}

  EmbeddingVec get(const std::string& text) {
    {
      std::shared_lock lock(mutex_);
      if (auto it = cache_.find(text); it != cache_.end()) return it->second;
    }
    std::unique_lock lock(mutex_);
    if (auto it = cache_.find(text); it != cache_.end()) return it->second;
    return cache_.emplace(text, embedder_.embed(text)).first->second;
  }

 private:
  TextEmbedder& embedder_;
  std::shared_mutex mutex_;
  std::map<std::string, EmbeddingVec> cache_;
};

}  // namespace

bool same_caption(std::string_view a, std::string_view b) { return tokenize(a) == tokenize(b); }

AttackResult run_attack(const ImageTensor& clean, std::string_view target_text, const AttentionHeatmap& heatmap,
                        TextGenerator& generator, TextEmbedder& embedder, DEConfig config,
                        const AttackOptions& options) {
  if (tokenize(target_text).empty()) throw std::invalid_argument("run_attack: target text is empty");
  config.strategy = Strategy::CurrentToBest;
  config.direction = Direction::Minimize;
  config.validate();

  const AttentionHeatmap mask = fit_to_image(heatmap, clean);
  if (summarize_heatmap(mask).all_zero && options.log)
    *options.log << "warning: zero heatmap, every initial individual is a copy of the clean image\n";

  const OracleCounts gen_before = generator.stats().snapshot();
  const OracleCounts emb_before = embedder.stats().snapshot();
  auto finish = [&](AttackResult& r) {
    r.queries = generator.stats().snapshot().generate_queries - gen_before.generate_queries;
    r.embed_queries = embedder.stats().snapshot().embed_queries - emb_before.embed_queries;
    r.stats = perturbation_stats(r.adversarial, clean);
  };

  EmbeddingCache cache(embedder);
  const EmbeddingVec target = embedder.embed(target_text);
  const std::string target_str(target_text);

  AttackResult result;
  result.clean_text = generator.generate(clean);
  if (same_caption(result.clean_text, target_text)) {
    result.adversarial = clean;
    result.final_text = result.clean_text;
    result.final_s_clip = s_clip(cache.get(result.clean_text), target);
    result.success = true;
    result.trace.best = {clean, result.final_s_clip, result.clean_text};
    result.trace.records.push_back({0, result.final_s_clip, result.final_s_clip, 1});
    result.trace.reached_target = true;
    finish(result);
    return result;
  }

  FitnessFn fitness = [&](const ImageTensor& genome) {
    std::string text = generator.generate(genome);
    const double distance = s_clip(cache.get(text), target);
    return Evaluation{distance, std::move(text)};
  };
  Initializer init = [&](const ImageTensor& image, const DEConfig& c, Rng& rng) {
    return init_masked(image, mask, c, rng);
  };
  RunHooks hooks;
  hooks.stop_when = [&](const Individual& ind) { return same_caption(*ind.output_text, target_str); };
  if (options.remask_each_generation) {
    const Eigen::ArrayXd bound = per_element_mask(mask) * config.eta;
    hooks.constrain_trial = [&clean, bound](Eigen::ArrayXd& trial) {
      trial = clean.data() + (trial - clean.data()).max(-bound).min(bound);
    };
  }

  result.trace = run(clean, init, fitness, config, hooks);

  // Prefer an exact caption match over a marginally lower distance.
  const Individual* chosen = &result.trace.best;
  for (const auto& ind : result.trace.final_population)
    if (same_caption(*ind.output_text, target_str) &&
        (!same_caption(*chosen->output_text, target_str) || *ind.fitness < *chosen->fitness))
      chosen = &ind;

  result.adversarial = chosen->genome;
  result.final_text = *chosen->output_text;
  result.final_s_clip = *chosen->fitness;
  result.generations = result.trace.generations();
  result.success = same_caption(result.final_text, target_text) ||
                   (config.target_fitness && result.final_s_clip <= *config.target_fitness);
  finish(result);
  if (options.log)
    *options.log << (result.success ? "success" : "budget exhausted") << " after " << result.generations
                 << " generations, " << result.queries << " queries: \"" << result.final_text << "\"\n";
  return result;
}

void write_attack_bundle(const std::filesystem::path& dir, const ImageTensor& clean, const AttentionHeatmap& heatmap,
                         std::string_view target_text, const AttackResult& result, const MetricsReport& metrics,
                         const DEConfig& config, const AttackOptions& options) {
  std::filesystem::create_directories(dir);
  save_image(dir / "adversarial.png", result.adversarial);
  save_image(dir / "clean.png", clean);
  save_heatmap(dir / "heatmap.aah", heatmap);

  nlohmann::json config_echo = config_to_json(config);
  config_echo["strategy"] = strategy_name(Strategy::CurrentToBest);
  config_echo["direction"] = direction_name(Direction::Minimize);
  config_echo["remask_each_generation"] = options.remask_each_generation;

  const nlohmann::json report = {
      {"target_text", std::string(target_text)},
      {"clean_text", result.clean_text},
      {"final_text", result.final_text},
      {"success", result.success},
      {"final_s_clip", result.final_s_clip},
      {"metrics",
       {{"s_sem", metrics.s_sem},
        {"bleu4", metrics.bleu4},
        {"clip_score", metrics.clip_score},
        {"mean_abs", metrics.stats.mean_abs},
        {"max_abs", metrics.stats.max_abs},
        {"num_changed", metrics.stats.num_changed}}},
      {"queries", result.queries},
      {"embed_queries", result.embed_queries},
      {"generations", result.generations},
      {"epsilon", config.epsilon},
      {"seed", config.seed},
      {"config", config_echo},
      {"trace", trace_to_json(result.trace)["records"]},
  };
  write_file_atomic(dir / "report.json", report.dump(2) + "\n");
}

BundleInfo read_bundle_report(const std::filesystem::path& dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file_text(dir / "report.json"));
    BundleInfo info;
    info.target_text = j.at("target_text").get<std::string>();
    info.final_text = j.at("final_text").get<std::string>();
    const auto& m = j.at("metrics");
    info.metrics.s_sem = m.at("s_sem").get<double>();
    info.metrics.bleu4 = m.at("bleu4").get<double>();
    info.metrics.clip_score = m.at("clip_score").get<double>();
    info.metrics.stats.mean_abs = m.at("mean_abs").get<double>();
    info.metrics.stats.max_abs = m.at("max_abs").get<double>();
    info.metrics.stats.num_changed = m.at("num_changed").get<std::size_t>();
    info.queries = j.at("queries").get<std::uint64_t>();
    info.generations = j.at("generations").get<int>();
    info.success = j.at("success").get<bool>();
    return info;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError((dir / "report.json").string() + ": " + e.what());
  }
}

}  // namespace aaa
