#pragma once

#include <png.h>

#include <algorithm>
#include <cctype>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"

namespace hebbsal {

enum class Channel : int { R = 0, G = 1, B = 2 };

inline constexpr std::array<Channel, 3> kChannels{Channel::R, Channel::G, Channel::B};

inline const char* channel_name(Channel c) {
  switch (c) {
    case Channel::R: return "R";
    case Channel::G: return "G";
    case Channel::B: return "B";
  }
  return "?";
}

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;

  double operator[](Channel c) const {
    return c == Channel::R ? r : (c == Channel::G ? g : b);
  }
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Normalized RGB image. `pixels` may be padded beyond the source dimensions;
// source_width/source_height record what the file actually held.
struct RgbImage {
  Grid<Rgb> pixels;
  int source_width = 0;
  int source_height = 0;

  RgbImage() = default;
  RgbImage(int width, int height, Rgb fill = {})
      : pixels(height, width, fill), source_width(width), source_height(height) {}

  int width() const { return pixels.cols(); }
  int height() const { return pixels.rows(); }
  Rgb& at(int x, int y) { return pixels(y, x); }
  const Rgb& at(int x, int y) const { return pixels(y, x); }
};

// 8-bit raster as decoded from disk, before normalization.
struct Raster8 {
  int width = 0;
  int height = 0;
  int channels = 0;  // 1 (gray) or 3 (RGB)
  std::vector<std::uint8_t> data;
};

inline int round_up(int value, int multiple) {
  return ((value + multiple - 1) / multiple) * multiple;
}

inline double to_unit(std::uint8_t v) { return static_cast<double>(v) / 255.0; }

inline std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

namespace detail {

inline std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return ext;
}

inline std::vector<char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

inline bool has_png_signature(const std::vector<char>& bytes) {
  static constexpr unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return bytes.size() >= 8 && std::memcmp(bytes.data(), sig, 8) == 0;
}

inline Raster8 decode_png(const std::vector<char>& bytes, int channels, const std::string& name) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw FormatError(name + ": " + image.message);
  }
  // Gray requests read the first channel of an RGB(A) file verbatim rather than
  // letting libpng apply a luminance conversion.
  const bool source_gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
  image.format = (channels == 1 && source_gray) ? PNG_FORMAT_GRAY : PNG_FORMAT_RGBA;
  const int decoded_channels = (image.format == PNG_FORMAT_GRAY) ? 1 : 4;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw FormatError(name + ": " + image.message);
  }
  Raster8 out;
  out.width = static_cast<int>(image.width);
  out.height = static_cast<int>(image.height);
  out.channels = channels;
  out.data.resize(static_cast<std::size_t>(out.width) * out.height * channels);
  const std::size_t n = static_cast<std::size_t>(out.width) * out.height;
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < channels; ++c) {
      const int src_c = decoded_channels == 1 ? 0 : c;  // alpha is dropped
      out.data[i * channels + c] = buffer[i * decoded_channels + src_c];
    }
  }
  return out;
}

// Netpbm P2/P3/P5/P6. Only maxval <= 255 is supported.
inline Raster8 decode_pnm(const std::vector<char>& bytes, const std::string& name) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> int {
    skip_space();
    if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      throw FormatError(name + ": malformed PNM header");
    }
    long value = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      value = value * 10 + (bytes[pos] - '0');
      if (value > 1'000'000) throw FormatError(name + ": PNM value out of range");
      ++pos;
    }
    return static_cast<int>(value);
  };

  if (bytes.size() < 2 || bytes[0] != 'P') throw FormatError(name + ": not a PNM file");
  const char kind = bytes[1];
  if (kind != '2' && kind != '3' && kind != '5' && kind != '6') {
    throw FormatError(name + ": unsupported PNM variant P" + std::string(1, kind));
  }
  pos = 2;
  Raster8 out;
  out.width = read_int();
  out.height = read_int();
  const int maxval = read_int();
  if (out.width <= 0 || out.height <= 0) throw FormatError(name + ": empty PNM image");
  if (maxval <= 0 || maxval > 255) throw FormatError(name + ": only 8-bit PNM is supported");
  out.channels = (kind == '3' || kind == '6') ? 3 : 1;
  const std::size_t count = static_cast<std::size_t>(out.width) * out.height * out.channels;
  out.data.resize(count);

  auto rescale = [maxval](int v) {
    return static_cast<std::uint8_t>(maxval == 255 ? v : (v * 255 + maxval / 2) / maxval);
  };
  if (kind == '5' || kind == '6') {
    ++pos;  // single whitespace byte after maxval
    if (bytes.size() < pos + count) throw FormatError(name + ": truncated PNM raster");
    for (std::size_t i = 0; i < count; ++i) {
      const int v = static_cast<unsigned char>(bytes[pos + i]);
      if (v > maxval) throw FormatError(name + ": sample exceeds maxval");
      out.data[i] = rescale(v);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const int v = read_int();
      if (v > maxval) throw FormatError(name + ": sample exceeds maxval");
      out.data[i] = rescale(v);
    }
  }
  return out;
}

}  // namespace detail

// Decodes a PNG or PNM file into 8-bit samples with the requested channel count.
inline Raster8 read_raster(const std::filesystem::path& path, int channels) {
  const auto bytes = detail::read_file_bytes(path);
  const std::string name = path.string();
  Raster8 raster;
  if (detail::has_png_signature(bytes)) {
    raster = detail::decode_png(bytes, channels, name);
  } else if (bytes.size() >= 2 && bytes[0] == 'P') {
    raster = detail::decode_pnm(bytes, name);
  } else {
    throw FormatError(name + ": unsupported image format (expected PNG or PPM)");
  }
  if (raster.channels == channels) return raster;

  Raster8 converted{raster.width, raster.height, channels, {}};
  const std::size_t n = static_cast<std::size_t>(raster.width) * raster.height;
  converted.data.resize(n * channels);
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < channels; ++c) {
      converted.data[i * channels + c] = raster.data[i * raster.channels + (raster.channels == 1 ? 0 : c)];
    }
  }
  return converted;
}

// Zero-pads right and bottom edges to the next multiple of `multiple`.
inline RgbImage pad_image(const RgbImage& img, int multiple) {
  const int w = round_up(img.width(), multiple);
  const int h = round_up(img.height(), multiple);
  if (w == img.width() && h == img.height()) return img;
  RgbImage out(w, h);
  out.source_width = img.source_width;
  out.source_height = img.source_height;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) out.at(x, y) = img.at(x, y);
  return out;
}

inline RgbImage image_from_raster(const Raster8& raster) {
  RgbImage img(raster.width, raster.height);
  for (int y = 0; y < raster.height; ++y) {
    for (int x = 0; x < raster.width; ++x) {
      const std::size_t i = (static_cast<std::size_t>(y) * raster.width + x) * 3;
      img.at(x, y) = {to_unit(raster.data[i]), to_unit(raster.data[i + 1]), to_unit(raster.data[i + 2])};
    }
  }
  return img;
}

// Loads a PNG or PPM, normalizes 8-bit values by 255 and pads to `pad_multiple`.
inline RgbImage load_image(const std::filesystem::path& path, int pad_multiple = 16) {
  return pad_image(image_from_raster(read_raster(path, 3)), pad_multiple);
}

inline void write_png(const std::filesystem::path& path, const Raster8& raster) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(raster.width);
  image.height = static_cast<png_uint_32>(raster.height);
  image.format = raster.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, raster.data.data(), 0, nullptr)) {
    throw IoError(path.string() + ": " + image.message);
  }
}

inline Raster8 to_raster(const RgbImage& img) {
  Raster8 out{img.width(), img.height(), 3, {}};
  out.data.reserve(static_cast<std::size_t>(img.width()) * img.height() * 3);
  for (const Rgb& p : img.pixels) {
    out.data.push_back(to_byte(p.r));
    out.data.push_back(to_byte(p.g));
    out.data.push_back(to_byte(p.b));
  }
  return out;
}

inline void save_png(const std::filesystem::path& path, const RgbImage& img) { write_png(path, to_raster(img)); }

// Writes a grid of values in [0,1] as an 8-bit grayscale PNG.
template <typename T>
void save_gray_png(const std::filesystem::path& path, const Grid<T>& values, double scale = 1.0) {
  Raster8 out{values.cols(), values.rows(), 1, {}};
  out.data.reserve(values.size());
  for (const T& v : values) out.data.push_back(to_byte(static_cast<double>(v) * scale));
  write_png(path, out);
}

inline void save_ppm(const std::filesystem::path& path, const RgbImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
  const auto raster = to_raster(img);
  out.write(reinterpret_cast<const char*>(raster.data.data()), static_cast<std::streamsize>(raster.data.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace hebbsal
