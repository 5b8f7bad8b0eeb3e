#include "aaa/image.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "aaa/fsutil.hpp"

namespace aaa {

namespace {

constexpr std::uint8_t kAah1Magic[4] = {0x41, 0x41, 0x48, 0x31};

void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32le(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

// Raw IHDR fields; the simplified libpng API hides the original bit depth.
struct PngHeader {
  std::uint32_t width, height;
  int bit_depth, color_type;
};

PngHeader read_png_header(const std::vector<std::uint8_t>& bytes) {
  static constexpr std::uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() < 33 || std::memcmp(bytes.data(), kSignature, 8) != 0 ||
      std::memcmp(bytes.data() + 12, "IHDR", 4) != 0)
    throw FormatError("not a PNG file");
  auto be32 = [&](std::size_t off) {
    return (std::uint32_t(bytes[off]) << 24) | (std::uint32_t(bytes[off + 1]) << 16) |
           (std::uint32_t(bytes[off + 2]) << 8) | std::uint32_t(bytes[off + 3]);
  };
  return {be32(16), be32(20), bytes[24], bytes[25]};
}

}  // namespace

AttentionHeatmap resample_bilinear(const AttentionHeatmap& heatmap, int width, int height) {
  if (heatmap.width() == width && heatmap.height() == height) return heatmap;
  if (heatmap.width() <= 0 || heatmap.height() <= 0)
    throw DimensionError("cannot resample an empty heatmap");
  const int sw = heatmap.width();
  const int sh = heatmap.height();
  Eigen::ArrayXd out(Eigen::Index(width) * height);
  const double sx = double(sw) / width;
  const double sy = double(sh) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, double(sh - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, sh - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, double(sw - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, sw - 1);
      const double wx = fx - x0;
      const double top = (1 - wx) * heatmap(x0, y0) + wx * heatmap(x1, y0);
      const double bottom = (1 - wx) * heatmap(x0, y1) + wx * heatmap(x1, y1);
      // Convex weights keep the result in [0, 1] up to rounding.
      out[Eigen::Index(y) * width + x] = std::clamp((1 - wy) * top + wy * bottom, 0.0, 1.0);
    }
  }
  return AttentionHeatmap(width, height, std::move(out));
}

AttentionHeatmap fit_to_image(const AttentionHeatmap& heatmap, const ImageTensor& image) {
  return resample_bilinear(heatmap, image.width(), image.height());
}

Eigen::ArrayXd per_element_mask(const AttentionHeatmap& heatmap) {
  Eigen::ArrayXd mask(heatmap.values().size() * ImageTensor::kChannels);
  for (Eigen::Index p = 0; p < heatmap.values().size(); ++p)
    mask.segment<3>(p * 3).setConstant(heatmap.values()[p]);
  return mask;
}

ImageTensor decode_png(const std::vector<std::uint8_t>& bytes) {
  const PngHeader header = read_png_header(bytes);
  if (header.bit_depth != 8)
    throw FormatError("unsupported PNG bit depth " + std::to_string(header.bit_depth) +
                      " (expected 8)");
  if (header.color_type != PNG_COLOR_TYPE_RGB) {
    const char* what = header.color_type == PNG_COLOR_TYPE_RGB_ALPHA ? "RGBA (alpha channel)"
                       : header.color_type == PNG_COLOR_TYPE_PALETTE ? "palette"
                                                                     : "grayscale";
    throw FormatError(std::string("unsupported PNG color type ") + what + " (expected RGB)");
  }

  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw FormatError(std::string("PNG decode failed: ") + image.message);
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw FormatError("PNG decode failed: " + msg);
  }
  Eigen::ArrayXd data(static_cast<Eigen::Index>(pixels.size()));
  for (std::size_t i = 0; i < pixels.size(); ++i) data[Eigen::Index(i)] = pixels[i];
  return ImageTensor(static_cast<int>(image.width), static_cast<int>(image.height), std::move(data));
}

std::vector<std::uint8_t> encode_png(const ImageTensor& image) {
  std::vector<png_byte> pixels(static_cast<std::size_t>(image.size()));
  for (Eigen::Index i = 0; i < image.size(); ++i)
    pixels[std::size_t(i)] = static_cast<png_byte>(std::lround(std::clamp(image.data()[i], 0.0, 255.0)));

  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, pixels.data(), 0, nullptr))
    throw FormatError(std::string("PNG encode failed: ") + png.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, pixels.data(), 0, nullptr))
    throw FormatError(std::string("PNG encode failed: ") + png.message);
  out.resize(size);
  return out;
}

ImageTensor load_image(const std::filesystem::path& path) {
  try {
    return decode_png(read_file_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_image(const std::filesystem::path& path, const ImageTensor& image) {
  write_file_atomic(path, encode_png(image));
}

std::vector<std::uint8_t> encode_aah1(const AttentionHeatmap& heatmap) {
  std::vector<std::uint8_t> out(kAah1Magic, kAah1Magic + 4);
  out.reserve(12 + 4 * std::size_t(heatmap.values().size()));
  put_u32le(out, static_cast<std::uint32_t>(heatmap.width()));
  put_u32le(out, static_cast<std::uint32_t>(heatmap.height()));
  for (Eigen::Index i = 0; i < heatmap.values().size(); ++i)
    put_u32le(out, std::bit_cast<std::uint32_t>(static_cast<float>(heatmap.values()[i])));
  return out;
}

AttentionHeatmap decode_aah1(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kAah1Magic, 4) != 0)
    throw FormatError("bad heatmap magic (expected AAH1)");
  const std::uint64_t width = get_u32le(bytes.data() + 4);
  const std::uint64_t height = get_u32le(bytes.data() + 8);
  const std::uint64_t count = width * height;
  if (bytes.size() != 12 + 4 * count)
    throw FormatError("heatmap payload is " + std::to_string(bytes.size() - 12) + " bytes, expected " +
                      std::to_string(4 * count));
  Eigen::ArrayXd values(static_cast<Eigen::Index>(count));
  for (std::uint64_t i = 0; i < count; ++i)
    values[Eigen::Index(i)] = std::bit_cast<float>(get_u32le(bytes.data() + 12 + 4 * i));
  return AttentionHeatmap(static_cast<int>(width), static_cast<int>(height), std::move(values));
}

AttentionHeatmap load_heatmap(const std::filesystem::path& path) {
  try {
    return decode_aah1(read_file_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_heatmap(const std::filesystem::path& path, const AttentionHeatmap& heatmap) {
  write_file_atomic(path, encode_aah1(heatmap));
}

}  // namespace aaa
