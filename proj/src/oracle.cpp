#include "aaa/oracle.hpp"

#include <array>

namespace aaa {

namespace {

struct QuadrantWords {
  const char* brightness;
  const char* color;
};

QuadrantWords describe(const ImageTensor& image, int x0, int x1, int y0, int y1) {
  std::array<double, 3> mean{0, 0, 0};
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x)
      for (int c = 0; c < 3; ++c) mean[c] += image(x, y, c);
  const double count = double(x1 - x0) * double(y1 - y0);
  for (double& m : mean) m /= count;

  static constexpr const char* kColors[3] = {"red", "green", "blue"};
  int best = 0;
  for (int c = 1; c < 3; ++c)
    if (mean[c] > mean[best]) best = c;
  const double overall = (mean[0] + mean[1] + mean[2]) / 3.0;
  return {overall >= 128.0 ? "bright" : "dark", kColors[best]};
}

}  // namespace

std::string toy_generate(const ImageTensor& image) {
  if (image.width() < 2 || image.height() < 2)
    throw ValidationError("toy captioner needs an image of at least 2x2 pixels");
  const int hw = image.width() / 2;
  const int hh = image.height() / 2;
  const QuadrantWords q[4] = {
      describe(image, 0, hw, 0, hh),
      describe(image, hw, image.width(), 0, hh),
      describe(image, 0, hw, hh, image.height()),
      describe(image, hw, image.width(), hh, image.height()),
  };
  auto phrase = [](const QuadrantWords& w) {
    return std::string("a ") + w.brightness + " " + w.color + " square";
  };
  return "a photo of " + phrase(q[0]) + " , " + phrase(q[1]) + " , " + phrase(q[2]) + " and " +
         phrase(q[3]);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char b : bytes) {
    hash ^= b;
    hash *= 1099511628211ull;
  }
  return hash;
}

EmbeddingVec toy_embed(std::string_view text) {
  EmbeddingVec v = EmbeddingVec::Zero(kToyEmbedDim);
  for (const auto& token : tokenize(text)) v[Eigen::Index(fnv1a64(token) % kToyEmbedDim)] += 1.0;
  const double norm = v.norm();
  if (norm > 0) v /= norm;
  return v;
}

}  // namespace aaa
