#include "aaa/fixture.hpp"

#include <algorithm>
#include <stdexcept>

namespace aaa {

ImageTensor quadrant_fixture(double margin, int size) {
  if (size < 2) throw DimensionError("fixture size must be >= 2");
  const double red = std::min(255.0, 125.0 + margin);
  const double blue = red - margin;
  if (blue < 0) throw ValidationError("fixture margin too large");
  Eigen::ArrayXd data(Eigen::Index(size) * size * 3);
  const int half = size / 2;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const Eigen::Index i = ImageTensor::index(size, x, y, 0);
      const bool first = x < half && y < half;
      data[i] = first ? red : 200.0;
      data[i + 1] = 0.0;
      data[i + 2] = first ? blue : 0.0;
    }
  return ImageTensor(size, size, std::move(data));
}

AttentionHeatmap quadrant_heatmap(int width, int height, double inside, double outside) {
  Eigen::ArrayXd values(Eigen::Index(width) * height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      values[Eigen::Index(y) * width + x] = (x < width / 2 && y < height / 2) ? inside : outside;
  return AttentionHeatmap(width, height, std::move(values));
}

std::string recolor_first_quadrant(std::string_view caption, std::string_view color) {
  std::string out(caption);
  const auto end = out.find(" square");
  if (end == std::string::npos || end == 0) throw std::invalid_argument("caption has no square phrase");
  const auto begin = out.rfind(' ', end - 1) + 1;
  out.replace(begin, end - begin, color);
  return out;
}

std::string_view toy_lexicon_tsv() {
  return "a\tother\tdet.a\n"
         "of\tother\tprep.of\n"
         "and\tother\tconj.and\n"
         "photo\tnoun\tphotograph.n.01\n"
         "picture\tnoun\tphotograph.n.01\n"
         "photograph\tnoun\tphotograph.n.01\n"
         "square\tnoun\tsquare.n.01\n"
         "square\tadjective\tsquare.a.01\n"
         "bright\tadjective\tbright.a.01\n"
         "light\tadjective\tbright.a.01\n"
         "dark\tadjective\tdark.a.01\n"
         "dark\tnoun\tdarkness.n.01\n"
         "dim\tadjective\tdark.a.01\n"
         "red\tadjective\tred.a.01\n"
         "red\tnoun\tred.n.01\n"
         "crimson\tadjective\tred.a.01\n"
         "green\tadjective\tgreen.a.01\n"
         "green\tnoun\tgreen.n.01\n"
         "blue\tadjective\tblue.a.01\n"
         "blue\tnoun\tblue.n.01\n"
         "azure\tadjective\tblue.a.01\n"
         "is\tverb\tbe.v.01\n";
}

SynonymLexicon toy_lexicon() { return parse_lexicon(toy_lexicon_tsv()); }

}  // namespace aaa
