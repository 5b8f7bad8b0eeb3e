#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>

#include "aaa/oracle.hpp"

namespace aaa {

struct BridgeOptions {
  int max_in_flight = 4;
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{100};
  std::chrono::seconds timeout{120};
};

struct BridgeHealth {
  std::string status;
  int embed_dim = 0;
};

/// Client for the model bridge HTTP protocol (/generate, /embed, /heatmap,
/// /health). Transport failures are retried with exponential backoff; HTTP
/// status and schema errors are not.
class BridgeClient final : public TextGenerator, public TextEmbedder, public HeatmapProvider {
 public:
  explicit BridgeClient(std::string base_url, BridgeOptions options = {});

  BridgeHealth health();
  const std::string& base_url() const { return base_url_; }
  const OracleStats& stats() const { return *shared_stats_; }

 protected:
  std::string do_generate(const ImageTensor& image) override;
  EmbeddingVec do_embed(std::string_view text) override;
  AttentionHeatmap do_heatmap(const ImageTensor& image, std::string_view target_text) override;

 private:
  BridgeClient(std::string base_url, BridgeOptions options, std::shared_ptr<OracleStats> stats);

  std::string post(const std::string& route, const std::string& body);
  std::string get(const std::string& route);

  std::string base_url_;
  BridgeOptions options_;
  std::shared_ptr<OracleStats> shared_stats_;
  std::counting_semaphore<1024> in_flight_;
  std::mutex dim_mutex_;
  std::optional<Eigen::Index> embed_dim_;
};

}  // namespace aaa
