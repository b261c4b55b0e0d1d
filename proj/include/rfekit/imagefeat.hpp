#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace rfekit::imagefeat {

inline constexpr std::size_t kGrid = 32;
inline constexpr std::size_t kFeatureCount = kGrid * kGrid;
// Recorded by image models in place of a vocabulary hash.
inline constexpr std::string_view kFeaturizerId = "rfekit-gridmean-32x32 v1";

// Row-major 8-bit grayscale page.
class PageImage {
 public:
  PageImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels);
  // Uniform page of the given intensity.
  PageImage(std::size_t width, std::size_t height, std::uint8_t fill);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  const std::vector<std::uint8_t>& pixels() const { return pixels_; }
  std::uint8_t at(std::size_t x, std::size_t y) const { return pixels_[y * width_ + x]; }
  std::uint8_t& at(std::size_t x, std::size_t y) { return pixels_[y * width_ + x]; }

  bool operator==(const PageImage&) const = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<std::uint8_t> pixels_;
};

// 1024 box means in [0,1], row-major over the 32x32 grid.
using DenseFeatures = std::array<double, kFeatureCount>;

// Accepts P2 (ASCII) and P5 (binary) graymaps with maxval <= 255. Comments
// ('#' to end of line) are allowed in the header.
PageImage decode_pgm(std::string_view bytes);

// Binary P5 encoding with maxval 255.
std::string encode_pgm(const PageImage& image);

// Mean intensity / 255 over each cell of a 32x32 partition with row bands
// [floor(k*H/32), floor((k+1)*H/32)) and likewise for columns. On pages
// narrower or shorter than 32 px some bands are empty; an empty band takes
// the nearest preceding non-empty band on its axis (the following one when
// no band precedes it).
DenseFeatures image_features(const PageImage& image);

}  // namespace rfekit::imagefeat
