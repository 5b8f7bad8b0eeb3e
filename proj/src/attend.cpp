#include "aaa/attend.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "aaa/fsutil.hpp"
#include "aaa/metrics.hpp"

namespace aaa {

std::string category_prompt(std::string_view category) { return "a photo of " + std::string(category); }

std::string choose_category(std::string_view target_text, const std::vector<std::string>& categories,
                            TextEmbedder& embed) {
  if (categories.empty()) throw std::invalid_argument("choose_category: empty category list");
  const EmbeddingVec target = embed.embed(target_text);
  // Cosines equal in exact arithmetic can differ in the last bits; those count as ties.
  constexpr double kTieTolerance = 1e-12;
  std::size_t best = 0;
  double best_similarity = 0;
  for (std::size_t i = 0; i < categories.size(); ++i) {
    const double similarity = cosine_similarity(target, embed.embed(category_prompt(categories[i])));
    if (i == 0 || similarity > best_similarity + kTieTolerance) {
      best = i;
      best_similarity = similarity;
    }
  }
  return categories[best];
}

std::vector<std::string> parse_categories(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t");
    out.push_back(line.substr(b, e - b + 1));
  }
  return out;
}

std::vector<std::string> load_categories(const std::filesystem::path& path) {
  return parse_categories(read_file_text(path));
}

HeatmapSummary summarize_heatmap(const AttentionHeatmap& heatmap) {
  HeatmapSummary s;
  const auto& v = heatmap.values();
  if (v.size() == 0) return s;
  s.mean = v.mean();
  s.max = v.maxCoeff();
  s.all_zero = s.max == 0.0;
  std::vector<double> sorted(v.data(), v.data() + v.size());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  s.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return s;
}

double log_search_volume(const AttentionHeatmap& heatmap, double eta) {
  double total = 0;
  for (Eigen::Index i = 0; i < heatmap.values().size(); ++i) {
    const double a = heatmap.values()[i];
    if (a > 0) total += 3.0 * std::log(a * eta);
  }
  return total;
}

AttentionHeatmap fetch_heatmap(const ImageTensor& image, std::string_view target_text, const HeatmapSource& source,
                               std::ostream* log) {
  AttentionHeatmap raw;
  if (const auto* path = std::get_if<std::filesystem::path>(&source)) {
    raw = load_heatmap(*path);
  } else {
    raw = std::get<std::reference_wrapper<HeatmapProvider>>(source).get().heatmap(image, target_text);
  }
  if (raw.width() <= 0 || raw.height() <= 0) throw DimensionError("heatmap is empty");
  AttentionHeatmap fitted = fit_to_image(raw, image);
  const HeatmapSummary summary = summarize_heatmap(fitted);
  if (log) {
    *log << "heatmap " << raw.width() << "x" << raw.height() << " -> " << fitted.width() << "x"
         << fitted.height() << ": mean " << summary.mean << ", median " << summary.median << ", max "
         << summary.max << '\n';
    if (summary.all_zero) *log << "warning: heatmap is all zeros; the attack has no search space\n";
  }
  return fitted;
}

}  // namespace aaa
