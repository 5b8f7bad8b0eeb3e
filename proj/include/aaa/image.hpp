#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aaa/errors.hpp"

namespace aaa {

/// RGB raster stored row-major with interleaved channels. Values are real
/// 8-bit intensities in [0, 255]; quantization only happens on save.
template <typename Scalar>
class BasicImage {
 public:
  using scalar_type = Scalar;
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  static constexpr int kChannels = 3;

  BasicImage() = default;

  BasicImage(int width, int height, Scalar fill = Scalar(0))
      : width_(width), height_(height) {
    check_shape(width, height);
    data_ = Array::Constant(Eigen::Index(width) * height * kChannels, fill);
    check_range();
  }

  BasicImage(int width, int height, Array data)
      : width_(width), height_(height), data_(std::move(data)) {
    check_shape(width, height);
    if (data_.size() != Eigen::Index(width) * height * kChannels)
      throw DimensionError("image data length " + std::to_string(data_.size()) +
                           " does not match " + std::to_string(width) + "x" +
                           std::to_string(height) + "x3");
    check_range();
  }

  int width() const { return width_; }
  int height() const { return height_; }
  Eigen::Index size() const { return data_.size(); }
  const Array& data() const { return data_; }

  static Eigen::Index index(int width, int x, int y, int c) {
    return (Eigen::Index(y) * width + x) * kChannels + c;
  }
  Scalar operator()(int x, int y, int c) const { return data_[index(width_, x, y, c)]; }

  bool same_shape(const BasicImage& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

 private:
  static void check_shape(int width, int height) {
    if (width < 0 || height < 0) throw DimensionError("negative image dimension");
  }
  void check_range() const {
    if (data_.size() == 0) return;
    if (!data_.allFinite() || data_.minCoeff() < Scalar(0) || data_.maxCoeff() > Scalar(255))
      throw ValidationError("image values must be finite and within [0, 255]");
  }

  int width_ = 0;
  int height_ = 0;
  Array data_;
};

/// Per-pixel attention in [0, 1], row-major, one value per pixel.
template <typename Scalar>
class BasicHeatmap {
 public:
  using scalar_type = Scalar;
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  BasicHeatmap() = default;

  BasicHeatmap(int width, int height, Scalar fill)
      : BasicHeatmap(width, height, Array::Constant(Eigen::Index(width) * height, fill)) {}

  BasicHeatmap(int width, int height, Array values)
      : width_(width), height_(height), values_(std::move(values)) {
    if (width < 0 || height < 0) throw DimensionError("negative heatmap dimension");
    if (values_.size() != Eigen::Index(width) * height)
      throw DimensionError("heatmap value count " + std::to_string(values_.size()) +
                           " does not match " + std::to_string(width) + "x" +
                           std::to_string(height));
    if (values_.size() > 0 &&
        (!values_.allFinite() || values_.minCoeff() < Scalar(0) || values_.maxCoeff() > Scalar(1)))
      throw ValidationError("heatmap values must be finite and within [0, 1]");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  const Array& values() const { return values_; }
  Scalar operator()(int x, int y) const { return values_[Eigen::Index(y) * width_ + x]; }

 private:
  int width_ = 0;
  int height_ = 0;
  Array values_;
};

using ImageTensor = BasicImage<double>;
using AttentionHeatmap = BasicHeatmap<double>;

struct PerturbationStats {
  double mean_abs = 0.0;
  double max_abs = 0.0;
  std::size_t num_changed = 0;
};

/// Mean/max absolute difference over every pixel-channel element.
template <typename DerivedA, typename DerivedB>
PerturbationStats perturbation_stats(const Eigen::ArrayBase<DerivedA>& adv,
                                     const Eigen::ArrayBase<DerivedB>& clean) {
  if (adv.size() != clean.size()) throw DimensionError("perturbation_stats: size mismatch");
  PerturbationStats stats;
  if (adv.size() == 0) return stats;
  const auto diff = (adv.derived().template cast<double>() -
                     clean.derived().template cast<double>()).abs().eval();
  stats.mean_abs = diff.mean();
  stats.max_abs = diff.maxCoeff();
  stats.num_changed = static_cast<std::size_t>((diff > 0.0).count());
  return stats;
}

template <typename Scalar>
PerturbationStats perturbation_stats(const BasicImage<Scalar>& adv, const BasicImage<Scalar>& clean) {
  if (!adv.same_shape(clean)) throw DimensionError("perturbation_stats: image dimensions differ");
  return perturbation_stats(adv.data(), clean.data());
}

/// Pulls `candidate` back inside the mean-absolute budget around `clean`:
/// scale the perturbation by min(1, eps / mean_abs), clamp to [0, 255], and
/// re-scale once if clamping left the budget violated. Candidates that are
/// already feasible come back untouched.
template <typename Derived, typename Scalar>
BasicImage<Scalar> project_to_budget(const Eigen::ArrayBase<Derived>& candidate,
                                     const BasicImage<Scalar>& clean, double epsilon) {
  using Array = typename BasicImage<Scalar>::Array;
  if (candidate.size() != clean.size()) throw DimensionError("project_to_budget: size mismatch");
  if (!(epsilon > 0.0)) throw ValidationError("project_to_budget: epsilon must be > 0");
  if (!candidate.derived().allFinite()) throw ValidationError("project_to_budget: non-finite candidate");

  Array delta = candidate.derived().template cast<Scalar>() - clean.data();
  if (delta.size() == 0) return clean;
  double mean_abs = delta.abs().template cast<double>().mean();
  if (mean_abs > epsilon) delta *= Scalar(epsilon / mean_abs);

  Array result = (clean.data() + delta).max(Scalar(0)).min(Scalar(255));
  delta = result - clean.data();
  mean_abs = delta.abs().template cast<double>().mean();
  if (mean_abs > epsilon) {
    // Shrinking toward clean keeps every element inside [0, 255].
    result = clean.data() + delta * Scalar(epsilon / mean_abs);
  }
  return BasicImage<Scalar>(clean.width(), clean.height(), std::move(result));
}

template <typename Scalar>
BasicImage<Scalar> project_to_budget(const BasicImage<Scalar>& candidate,
                                     const BasicImage<Scalar>& clean, double epsilon) {
  if (!candidate.same_shape(clean)) throw DimensionError("project_to_budget: image dimensions differ");
  return project_to_budget(candidate.data(), clean, epsilon);
}

/// Bilinear resampling with half-pixel centres; a constant map stays constant.
AttentionHeatmap resample_bilinear(const AttentionHeatmap& heatmap, int width, int height);

/// Returns the heatmap at image resolution, resampling when the shapes differ.
AttentionHeatmap fit_to_image(const AttentionHeatmap& heatmap, const ImageTensor& image);

/// Expands a per-pixel heatmap to one value per pixel-channel element.
Eigen::ArrayXd per_element_mask(const AttentionHeatmap& heatmap);

// PNG codec (8-bit RGB only).
ImageTensor decode_png(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_png(const ImageTensor& image);
ImageTensor load_image(const std::filesystem::path& path);
void save_image(const std::filesystem::path& path, const ImageTensor& image);

// AAH1 heatmap codec: magic "AAH1", u32le width, u32le height, f32le values.
std::vector<std::uint8_t> encode_aah1(const AttentionHeatmap& heatmap);
AttentionHeatmap decode_aah1(const std::vector<std::uint8_t>& bytes);
AttentionHeatmap load_heatmap(const std::filesystem::path& path);
void save_heatmap(const std::filesystem::path& path, const AttentionHeatmap& heatmap);

}  // namespace aaa
