#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "image.hpp"

namespace hebbsal {

inline constexpr int kDefaultPatchSize = 16;
inline constexpr int kDefaultLayers = 10;

struct ChannelPlane {
  Channel channel = Channel::R;
  Grid<double> values;  // row-major, same dimensions as the (padded) image
};

struct BinaryLayer {
  Channel channel = Channel::R;
  int layer_index = 0;
  BoolGrid mask;
};

struct Patch {
  int grid_row = 0;
  int grid_col = 0;
  BoolGrid bits;  // patch_size x patch_size
  int active_count = 0;
};

// Per-pixel count of subjects that selected the pixel as a region of interest.
struct RoiMap {
  Grid<std::uint32_t> counts;

  int width() const { return counts.cols(); }
  int height() const { return counts.rows(); }
};

inline std::array<ChannelPlane, 3> split_channels(const RgbImage& img) {
  std::array<ChannelPlane, 3> planes;
  for (Channel c : kChannels) {
    auto& plane = planes[static_cast<int>(c)];
    plane.channel = c;
    plane.values = Grid<double>(img.height(), img.width());
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) plane.values(y, x) = img.at(x, y)[c];
  }
  return planes;
}

// Index of the intensity layer holding `v`, or -1 for v <= 0.
//
// Layer j covers (j/n, (j+1)/n]; 1.0 lands in the top layer. The small slack
// keeps values that sit exactly on a boundary (51/255 == 0.2) in the lower layer
// despite rounding in v*n.
inline int layer_of(double v, int num_layers) {
  if (!(v > 0.0)) return -1;
  const int j = static_cast<int>(std::ceil(v * num_layers - 1e-9)) - 1;
  return std::clamp(j, 0, num_layers - 1);
}

inline std::vector<BinaryLayer> decompose_layers(const ChannelPlane& plane, int num_layers = kDefaultLayers) {
  if (num_layers < 1) throw ValidationError("num_layers must be >= 1");
  std::vector<BinaryLayer> layers(num_layers);
  for (int j = 0; j < num_layers; ++j) {
    layers[j].channel = plane.channel;
    layers[j].layer_index = j;
    layers[j].mask = BoolGrid(plane.values.rows(), plane.values.cols(), 0);
  }
  for (int r = 0; r < plane.values.rows(); ++r) {
    for (int c = 0; c < plane.values.cols(); ++c) {
      const int j = layer_of(plane.values(r, c), num_layers);
      if (j >= 0) layers[j].mask(r, c) = 1;
    }
  }
  return layers;
}

inline Grid<Patch> tile_patches(const BinaryLayer& layer, int patch_size = kDefaultPatchSize) {
  const auto& mask = layer.mask;
  if (patch_size < 1 || mask.rows() % patch_size != 0 || mask.cols() % patch_size != 0) {
    throw ValidationError("layer dimensions must be multiples of the patch size");
  }
  Grid<Patch> grid(mask.rows() / patch_size, mask.cols() / patch_size);
  for (int gr = 0; gr < grid.rows(); ++gr) {
    for (int gc = 0; gc < grid.cols(); ++gc) {
      Patch& p = grid(gr, gc);
      p.grid_row = gr;
      p.grid_col = gc;
      p.bits = BoolGrid(patch_size, patch_size, 0);
      for (int r = 0; r < patch_size; ++r) {
        for (int c = 0; c < patch_size; ++c) {
          const auto bit = mask(gr * patch_size + r, gc * patch_size + c);
          p.bits(r, c) = bit;
          p.active_count += bit;
        }
      }
    }
  }
  return grid;
}

// Parses comma-separated non-negative integer rows. Blank lines are ignored.
inline RoiMap parse_roi_csv(const std::string& text, const std::string& name = "<csv>") {
  std::vector<std::vector<std::uint32_t>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::uint32_t> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      const auto first = cell.find_first_not_of(" \t");
      const auto last = cell.find_last_not_of(" \t");
      if (first == std::string::npos) throw FormatError(name + ": empty CSV cell");
      cell = cell.substr(first, last - first + 1);
      std::size_t used = 0;
      long long v = 0;
      try {
        v = std::stoll(cell, &used);
      } catch (const std::exception&) {
        throw FormatError(name + ": non-integer CSV cell '" + cell + "'");
      }
      if (used != cell.size()) throw FormatError(name + ": non-integer CSV cell '" + cell + "'");
      if (v < 0 || v > 0xffffffffLL) throw FormatError(name + ": ROI counts must be non-negative");
      row.push_back(static_cast<std::uint32_t>(v));
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw FormatError(name + ": ragged CSV rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError(name + ": empty ROI grid");
  RoiMap roi{Grid<std::uint32_t>(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()))};
  for (int r = 0; r < roi.height(); ++r)
    for (int c = 0; c < roi.width(); ++c) roi.counts(r, c) = rows[r][c];
  return roi;
}

// Zero-pads to the target dimensions. The map must either already match or be
// the unpadded source of an image padded to `target_width` x `target_height`.
inline RoiMap pad_roi(const RoiMap& roi, int target_width, int target_height, int patch_size = kDefaultPatchSize) {
  const bool fits = roi.width() <= target_width && roi.height() <= target_height &&
                    round_up(roi.width(), patch_size) == target_width &&
                    round_up(roi.height(), patch_size) == target_height;
  if (!fits) {
    throw ValidationError("ROI map is " + std::to_string(roi.width()) + "x" + std::to_string(roi.height()) +
                          ", incompatible with padded image " + std::to_string(target_width) + "x" +
                          std::to_string(target_height));
  }
  RoiMap out{Grid<std::uint32_t>(target_height, target_width, 0)};
  for (int r = 0; r < roi.height(); ++r)
    for (int c = 0; c < roi.width(); ++c) out.counts(r, c) = roi.counts(r, c);
  return out;
}

// Reads a ROI map from CSV (by extension) or from a grayscale PNG/PGM whose
// pixel values are the counts.
inline RoiMap read_roi_map(const std::filesystem::path& path) {
  if (detail::lower_extension(path) == ".csv") {
    const auto bytes = detail::read_file_bytes(path);
    return parse_roi_csv(std::string(bytes.begin(), bytes.end()), path.string());
  }
  const Raster8 raster = read_raster(path, 1);
  RoiMap roi{Grid<std::uint32_t>(raster.height, raster.width)};
  for (std::size_t i = 0; i < raster.data.size(); ++i) roi.counts[i] = raster.data[i];
  return roi;
}

inline RoiMap load_roi_map(const std::filesystem::path& path, int target_width, int target_height,
                           int patch_size = kDefaultPatchSize) {
  return pad_roi(read_roi_map(path), target_width, target_height, patch_size);
}

}  // namespace hebbsal
