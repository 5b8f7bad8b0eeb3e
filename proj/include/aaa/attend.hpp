#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "aaa/image.hpp"
#include "aaa/oracle.hpp"

namespace aaa {

/// Text used to embed a category name: "a photo of " + name.
std::string category_prompt(std::string_view category);

/// Category whose prompt embedding has the highest cosine similarity with the
/// target text; the earliest category wins ties.
std::string choose_category(std::string_view target_text, const std::vector<std::string>& categories,
                            TextEmbedder& embed);

/// One name per line; blank lines are skipped.
std::vector<std::string> parse_categories(std::string_view text);
std::vector<std::string> load_categories(const std::filesystem::path& path);

struct HeatmapSummary {
  double mean = 0;
  double median = 0;
  double max = 0;
  bool all_zero = true;
};

HeatmapSummary summarize_heatmap(const AttentionHeatmap& heatmap);

/// Sum over perturbable elements (A > 0, three channels each) of log(A * eta):
/// the log-volume of the masked initial search box.
double log_search_volume(const AttentionHeatmap& heatmap, double eta);

using HeatmapSource = std::variant<std::filesystem::path, std::reference_wrapper<HeatmapProvider>>;

/// Loads or requests the heatmap, validates it, resamples it to the image
/// resolution and logs its summary statistics to `log` (if non-null).
AttentionHeatmap fetch_heatmap(const ImageTensor& image, std::string_view target_text,
                               const HeatmapSource& source, std::ostream* log = nullptr);

}  // namespace aaa
