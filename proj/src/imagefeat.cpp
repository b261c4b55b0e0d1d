#include "rfekit/imagefeat.hpp"

#include <cctype>
#include <charconv>
#include <string>

#include "rfekit/error.hpp"

namespace rfekit::imagefeat {

PageImage::PageImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width_ < 1 || height_ < 1) {
    throw Error(Errc::invalid_argument, "page image dimensions must be >= 1");
  }
  if (pixels_.size() != width_ * height_) {
    throw Error(Errc::invalid_argument, "page image pixel count does not match width x height");
  }
}

PageImage::PageImage(std::size_t width, std::size_t height, std::uint8_t fill)
    : PageImage(width, height, std::vector<std::uint8_t>(width * height, fill)) {}

namespace {

class PgmReader {
 public:
  explicit PgmReader(std::string_view bytes) : bytes_(bytes) {}

  void skip_separators() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  // Unsigned decimal; nullopt-like failure reported via the flag.
  bool read_uint(std::size_t& out) {
    skip_separators();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    if (pos_ == start) return false;
    auto [ptr, ec] = std::from_chars(bytes_.data() + start, bytes_.data() + pos_, out);
    return ec == std::errc() && ptr == bytes_.data() + pos_;
  }

  bool at_end() {
    skip_separators();
    return pos_ >= bytes_.size();
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }
  std::string_view rest() const { return bytes_.substr(pos_); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

// Maps each of the kGrid bands to a non-empty band [begin, end) on an axis
// of the given length.
std::array<std::pair<std::size_t, std::size_t>, kGrid> resolve_bands(std::size_t length) {
  std::array<std::pair<std::size_t, std::size_t>, kGrid> bands{};
  for (std::size_t k = 0; k < kGrid; ++k) {
    bands[k] = {k * length / kGrid, (k + 1) * length / kGrid};
  }
  std::size_t first_full = 0;
  while (bands[first_full].first == bands[first_full].second) ++first_full;
  for (std::size_t k = 0; k < first_full; ++k) bands[k] = bands[first_full];
  for (std::size_t k = first_full + 1; k < kGrid; ++k) {
    if (bands[k].first == bands[k].second) bands[k] = bands[k - 1];
  }
  return bands;
}

}  // namespace

PageImage decode_pgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') {
    throw Error(Errc::parse_error, "pgm: missing magic number");
  }
  const char kind = bytes[1];
  if (kind != '2' && kind != '5') {
    throw Error(Errc::format_unsupported,
                "pgm: unsupported format 'P" + std::string(1, kind) + "' (expected P2 or P5)");
  }
  PgmReader reader(bytes);
  reader.advance(2);
  std::size_t width = 0, height = 0, maxval = 0;
  if (!reader.read_uint(width) || !reader.read_uint(height) || !reader.read_uint(maxval)) {
    throw Error(Errc::parse_error, "pgm: malformed header");
  }
  if (width < 1 || height < 1) throw Error(Errc::parse_error, "pgm: zero dimension");
  if (maxval < 1 || maxval > 255) {
    throw Error(Errc::format_unsupported, "pgm: unsupported maxval " + std::to_string(maxval));
  }
  const std::size_t count = width * height;
  std::vector<std::uint8_t> pixels;
  pixels.reserve(count);
  auto scale = [maxval](std::size_t v) {
    return static_cast<std::uint8_t>(maxval == 255 ? v : (v * 255 + maxval / 2) / maxval);
  };

  if (kind == '5') {
    // Exactly one whitespace byte separates maxval from the raster.
    const auto rest = reader.rest();
    if (rest.empty() || !std::isspace(static_cast<unsigned char>(rest[0]))) {
      throw Error(Errc::truncated, "pgm: missing raster");
    }
    const auto raster = rest.substr(1);
    if (raster.size() < count) {
      throw Error(Errc::truncated, "pgm: header declares " + std::to_string(count) +
                                       " pixels, payload has " + std::to_string(raster.size()));
    }
    for (std::size_t i = 0; i < count; ++i) {
      const auto v = static_cast<unsigned char>(raster[i]);
      if (v > maxval) throw Error(Errc::parse_error, "pgm: sample exceeds maxval");
      pixels.push_back(scale(v));
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      std::size_t v = 0;
      if (reader.at_end()) {
        throw Error(Errc::truncated, "pgm: header declares " + std::to_string(count) +
                                         " pixels, payload has " + std::to_string(i));
      }
      if (!reader.read_uint(v)) throw Error(Errc::parse_error, "pgm: non-numeric sample");
      if (v > maxval) throw Error(Errc::parse_error, "pgm: sample exceeds maxval");
      pixels.push_back(scale(v));
    }
  }
  return PageImage(width, height, std::move(pixels));
}

std::string encode_pgm(const PageImage& image) {
  std::string out = "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  out.append(image.pixels().begin(), image.pixels().end());
  return out;
}

DenseFeatures image_features(const PageImage& image) {
  const auto rows = resolve_bands(image.height());
  const auto cols = resolve_bands(image.width());
  DenseFeatures features{};
  for (std::size_t r = 0; r < kGrid; ++r) {
    for (std::size_t c = 0; c < kGrid; ++c) {
      std::uint64_t sum = 0;
      for (std::size_t y = rows[r].first; y < rows[r].second; ++y) {
        for (std::size_t x = cols[c].first; x < cols[c].second; ++x) sum += image.at(x, y);
      }
      const auto area = (rows[r].second - rows[r].first) * (cols[c].second - cols[c].first);
      features[r * kGrid + c] = static_cast<double>(sum) / (255.0 * static_cast<double>(area));
    }
  }
  return features;
}

}  // namespace rfekit::imagefeat
