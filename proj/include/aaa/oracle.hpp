#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

#include "aaa/image.hpp"
#include "aaa/metrics.hpp"

namespace aaa {

struct OracleCounts {
  std::uint64_t generate_queries = 0;
  std::uint64_t embed_queries = 0;
  std::uint64_t heatmap_queries = 0;
};

/// Query counters shared by every oracle facet of one model endpoint.
class OracleStats {
 public:
  void count_generate() { generate_.fetch_add(1, std::memory_order_relaxed); }
  void count_embed() { embed_.fetch_add(1, std::memory_order_relaxed); }
  void count_heatmap() { heatmap_.fetch_add(1, std::memory_order_relaxed); }

  OracleCounts snapshot() const {
    return {generate_.load(), embed_.load(), heatmap_.load()};
  }

 private:
  std::atomic<std::uint64_t> generate_{0};
  std::atomic<std::uint64_t> embed_{0};
  std::atomic<std::uint64_t> heatmap_{0};
};

class OracleError : public std::runtime_error {
 public:
  enum class Kind { Connection, Status, Schema, DimensionDrift, Validation };

  OracleError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// The victim model G: image in, caption out. Implementations must be safe to
/// call concurrently.
class TextGenerator {
 public:
  explicit TextGenerator(std::shared_ptr<OracleStats> stats = std::make_shared<OracleStats>())
      : stats_(std::move(stats)) {}
  virtual ~TextGenerator() = default;

  std::string generate(const ImageTensor& image) {
    std::string text = do_generate(image);
    stats_->count_generate();
    return text;
  }
  const OracleStats& stats() const { return *stats_; }

 protected:
  virtual std::string do_generate(const ImageTensor& image) = 0;

 private:
  std::shared_ptr<OracleStats> stats_;
};

/// Text encoder E used for cosine feature distance.
class TextEmbedder {
 public:
  explicit TextEmbedder(std::shared_ptr<OracleStats> stats = std::make_shared<OracleStats>())
      : stats_(std::move(stats)) {}
  virtual ~TextEmbedder() = default;

  EmbeddingVec embed(std::string_view text) {
    EmbeddingVec v = do_embed(text);
    stats_->count_embed();
    return v;
  }
  const OracleStats& stats() const { return *stats_; }

 protected:
  virtual EmbeddingVec do_embed(std::string_view text) = 0;

 private:
  std::shared_ptr<OracleStats> stats_;
};

/// Attention heatmap of an image with respect to a target text.
class HeatmapProvider {
 public:
  explicit HeatmapProvider(std::shared_ptr<OracleStats> stats = std::make_shared<OracleStats>())
      : stats_(std::move(stats)) {}
  virtual ~HeatmapProvider() = default;

  AttentionHeatmap heatmap(const ImageTensor& image, std::string_view target_text) {
    AttentionHeatmap h = do_heatmap(image, target_text);
    stats_->count_heatmap();
    return h;
  }
  const OracleStats& stats() const { return *stats_; }

 protected:
  virtual AttentionHeatmap do_heatmap(const ImageTensor& image, std::string_view target_text) = 0;

 private:
  std::shared_ptr<OracleStats> stats_;
};

// --- Deterministic toy oracles -------------------------------------------

/// Describes the four quadrants (row-major) by dominant channel and
/// brightness, e.g. "a photo of a dark red square , a dark red square , ...".
std::string toy_generate(const ImageTensor& image);

inline constexpr int kToyEmbedDim = 64;

std::uint64_t fnv1a64(std::string_view bytes);

/// Bag-of-hashed-tokens: FNV-1a(token) mod 64, counts L2-normalised.
EmbeddingVec toy_embed(std::string_view text);

class QuadrantCaptioner final : public TextGenerator {
 public:
  using TextGenerator::TextGenerator;

 protected:
  std::string do_generate(const ImageTensor& image) override { return toy_generate(image); }
};

class HashEmbedder final : public TextEmbedder {
 public:
  using TextEmbedder::TextEmbedder;

 protected:
  EmbeddingVec do_embed(std::string_view text) override { return toy_embed(text); }
};

}  // namespace aaa
