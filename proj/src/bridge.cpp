#include "aaa/bridge.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <thread>

namespace aaa {

namespace {

using nlohmann::json;

json parse_body(const std::string& body, const std::string& route) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw OracleError(OracleError::Kind::Schema, route + ": response is not JSON: " + e.what());
  }
}

[[noreturn]] void schema_error(const std::string& route, const std::string& what) {
  throw OracleError(OracleError::Kind::Schema, route + ": " + what);
}

std::string image_b64(const ImageTensor& image) {
  const auto png = encode_png(image);
  return httplib::detail::base64_encode(std::string(png.begin(), png.end()));
}

}  // namespace

BridgeClient::BridgeClient(std::string base_url, BridgeOptions options)
    : BridgeClient(std::move(base_url), options, std::make_shared<OracleStats>()) {}

BridgeClient::BridgeClient(std::string base_url, BridgeOptions options, std::shared_ptr<OracleStats> stats)
    : TextGenerator(stats),
      TextEmbedder(stats),
      HeatmapProvider(stats),
      base_url_(std::move(base_url)),
      options_(options),
      shared_stats_(std::move(stats)),
      in_flight_(std::clamp(options.max_in_flight, 1, 1024)) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
  if (base_url_.empty()) throw ConfigError("bridge URL is empty");
  if (base_url_.find("://") == std::string::npos) base_url_ = "http://" + base_url_;
}

std::string BridgeClient::post(const std::string& route, const std::string& body) {
  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{in_flight_};

  auto backoff = options_.initial_backoff;
  std::string last_error;
  for (int attempt = 1; attempt <= std::max(1, options_.attempts); ++attempt) {
    httplib::Client client(base_url_);
    client.set_connection_timeout(options_.timeout);
    client.set_read_timeout(options_.timeout);
    client.set_write_timeout(options_.timeout);
    auto res = body.empty() ? client.Get(route) : client.Post(route, body, "application/json");
    if (res) {
      if (res->status != 200)
        throw OracleError(OracleError::Kind::Status,
                          route + ": HTTP " + std::to_string(res->status) + " " + res->body);
      return res->body;
    }
    last_error = httplib::to_string(res.error());
    if (attempt < options_.attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw OracleError(OracleError::Kind::Connection,
                    "bridge " + base_url_ + route + " unreachable: " + last_error);
}

std::string BridgeClient::get(const std::string& route) { return post(route, {}); }

BridgeHealth BridgeClient::health() {
  const json j = parse_body(get("/health"), "/health");
  if (!j.is_object() || !j.contains("status") || !j["status"].is_string())
    schema_error("/health", "missing string field 'status'");
  if (!j.contains("embed_dim") || !j["embed_dim"].is_number_integer())
    schema_error("/health", "missing integer field 'embed_dim'");
  return {j["status"].get<std::string>(), j["embed_dim"].get<int>()};
}

std::string BridgeClient::do_generate(const ImageTensor& image) {
  const json request = {{"image_png_b64", image_b64(image)}};
  const json j = parse_body(post("/generate", request.dump()), "/generate");
  if (!j.is_object() || !j.contains("text") || !j["text"].is_string())
    schema_error("/generate", "missing string field 'text'");
  return j["text"].get<std::string>();
}

EmbeddingVec BridgeClient::do_embed(std::string_view text) {
  const json request = {{"text", std::string(text)}};
  const json j = parse_body(post("/embed", request.dump()), "/embed");
  if (!j.is_object() || !j.contains("embedding") || !j["embedding"].is_array())
    schema_error("/embed", "missing array field 'embedding'");
  const auto& arr = j["embedding"];
  EmbeddingVec v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) schema_error("/embed", "non-numeric embedding entry");
    v[Eigen::Index(i)] = arr[i].get<double>();
  }
  if (!v.allFinite()) throw OracleError(OracleError::Kind::Validation, "/embed: non-finite embedding");
  std::lock_guard lock(dim_mutex_);
  if (!embed_dim_) embed_dim_ = v.size();
  if (*embed_dim_ != v.size())
    throw OracleError(OracleError::Kind::DimensionDrift,
                      "/embed: dimension changed from " + std::to_string(*embed_dim_) + " to " +
                          std::to_string(v.size()));
  return v;
}

AttentionHeatmap BridgeClient::do_heatmap(const ImageTensor& image, std::string_view target_text) {
  const json request = {{"image_png_b64", image_b64(image)}, {"target_text", std::string(target_text)}};
  const json j = parse_body(post("/heatmap", request.dump()), "/heatmap");
  if (!j.is_object() || !j.contains("width") || !j["width"].is_number_integer() || !j.contains("height") ||
      !j["height"].is_number_integer() || !j.contains("values") || !j["values"].is_array())
    schema_error("/heatmap", "expected {width:int, height:int, values:[number]}");
  const long long width = j["width"].get<long long>();
  const long long height = j["height"].get<long long>();
  const auto& arr = j["values"];
  if (width <= 0 || height <= 0 || static_cast<long long>(arr.size()) != width * height)
    schema_error("/heatmap", "values length does not match width*height");
  Eigen::ArrayXd values(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) schema_error("/heatmap", "non-numeric heatmap value");
    values[Eigen::Index(i)] = arr[i].get<double>();
  }
  try {
    return AttentionHeatmap(static_cast<int>(width), static_cast<int>(height), std::move(values));
  } catch (const ValidationError& e) {
    throw OracleError(OracleError::Kind::Validation, std::string("/heatmap: ") + e.what());
  }
}

}  // namespace aaa
