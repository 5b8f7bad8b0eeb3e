#pragma once

#include <string>
#include <string_view>

#include "aaa/image.hpp"
#include "aaa/metrics.hpp"

namespace aaa {

inline constexpr int kFixtureSize = 16;

/// Square test image: quadrant 0 has red mean `margin` above its blue mean
/// (red = min(255, 125 + margin)), the other quadrants are (200, 0, 0). The toy
/// captioner reads it as four dark red squares.
ImageTensor quadrant_fixture(double margin, int size = kFixtureSize);

/// `inside` on quadrant 0 (top-left), `outside` elsewhere.
AttentionHeatmap quadrant_heatmap(int width, int height, double inside = 1.0, double outside = 0.05);

/// The caption with the first quadrant's colour word replaced by `color`.
std::string recolor_first_quadrant(std::string_view caption, std::string_view color);

/// Lexicon covering the toy captioner's vocabulary (plus a few synonyms).
std::string_view toy_lexicon_tsv();
SynonymLexicon toy_lexicon();

}  // namespace aaa
