#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "aaa/de.hpp"
#include "aaa/metrics.hpp"
#include "aaa/oracle.hpp"

namespace aaa {

struct AttackOptions {
  /// Clamp every trial to |x - clean| <= A * eta each generation, not only at
  /// initialization.
  bool remask_each_generation = false;
  std::ostream* log = nullptr;
};

struct AttackResult {
  ImageTensor adversarial;
  std::string clean_text;
  std::string final_text;
  double final_s_clip = 2.0;
  bool success = false;
  std::uint64_t queries = 0;        // generate queries, including the clean image
  std::uint64_t embed_queries = 0;
  int generations = 0;
  PerturbationStats stats;          // recomputed from `adversarial`
  RunTrace trace;
};

/// True when both texts tokenize to the same word sequence.
bool same_caption(std::string_view a, std::string_view b);

/// Heatmap-masked current-to-best DE minimising the cosine distance between
/// the caption embedding and the target text embedding. Stops on an exact
/// caption match or when s_clip reaches config.target_fitness (if set).
AttackResult run_attack(const ImageTensor& clean, std::string_view target_text, const AttentionHeatmap& heatmap,
                        TextGenerator& generator, TextEmbedder& embedder, DEConfig config,
                        const AttackOptions& options = {});

struct BundleInfo {
  std::string target_text;
  std::string final_text;
  MetricsReport metrics;
  std::uint64_t queries = 0;
  int generations = 0;
  bool success = false;
};

/// Writes adversarial.png, clean.png, heatmap.aah and report.json into `dir`
/// (created if needed), each file atomically.
void write_attack_bundle(const std::filesystem::path& dir, const ImageTensor& clean, const AttentionHeatmap& heatmap,
                         std::string_view target_text, const AttackResult& result, const MetricsReport& metrics,
                         const DEConfig& config, const AttackOptions& options);

BundleInfo read_bundle_report(const std::filesystem::path& dir);

}  // namespace aaa
