#pragma once

#include <array>
#include <cmath>
#include <future>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "image.hpp"
#include "ingest.hpp"
#include "oja.hpp"

namespace hebbsal {

enum class PatchStatus : std::uint8_t {
  Inactive,       // fewer than 2 distinct active pixels; no weight vector
  Active,
  LowConfidence,  // isotropic pixel cloud; weights kept but any direction is a PC
};

inline const char* status_name(PatchStatus s) {
  switch (s) {
    case PatchStatus::Inactive: return "inactive";
    case PatchStatus::Active: return "active";
    case PatchStatus::LowConfidence: return "low_confidence";
  }
  return "?";
}

struct LearnedPatch {
  WeightVector w;
  PatchStatus status = PatchStatus::Inactive;

  bool active() const { return status != PatchStatus::Inactive; }
};

struct LayerWeightGrid {
  Channel channel = Channel::R;
  int layer_index = 0;
  Grid<LearnedPatch> cells;
};

// Learned weight grids for every channel, indexed [channel][layer].
using WeightGrids = std::array<std::vector<LayerWeightGrid>, 3>;

enum class CutoffMode {
  // Numerator counts (channel, layer, patch) triples: patch in the channel mask
  // with at least one dissimilar neighbour in that layer.
  Incidence,
  // Numerator is the sum of channel masks, i.e. the cutoff is the mean frequency.
  MeanFrequency,
};

inline const char* cutoff_mode_name(CutoffMode m) {
  return m == CutoffMode::Incidence ? "incidence" : "mean_frequency";
}

inline CutoffMode parse_cutoff_mode(std::string_view s) {
  if (s == "incidence") return CutoffMode::Incidence;
  if (s == "mean_frequency") return CutoffMode::MeanFrequency;
  throw ValidationError("unknown cutoff mode '" + std::string(s) + "'");
}

struct SaliencyConfig {
  double dissim_threshold = 0.1;
  int count_threshold = 10;
  bool use_absolute_dot = true;
  CutoffMode cutoff_mode = CutoffMode::Incidence;

  void validate() const {
    if (!(dissim_threshold >= 0.0 && dissim_threshold <= 1.0))
      throw ValidationError("saliency.dissim_threshold must be in [0,1]");
    if (count_threshold < 0) throw ValidationError("saliency.count_threshold must be >= 0");
  }
};

struct SaliencyGrid {
  int patch_size = kDefaultPatchSize;
  int image_width = 0;   // padded
  int image_height = 0;  // padded
  int source_width = 0;
  int source_height = 0;
  std::array<CountGrid, 3> per_channel_counts;
  std::array<BoolGrid, 3> channel_masks;
  CountGrid frequencies;
  BoolGrid salient;
  long long incidence_total = 0;
  double expected_value = 0.0;

  int rows() const { return salient.rows(); }
  int cols() const { return salient.cols(); }
};

inline double similarity(WeightVector wc, WeightVector wi) { return dot(wc, wi); }

struct DissimilarCount {
  int count = 0;
  bool center_inactive = false;
};

inline constexpr std::array<std::array<int, 2>, 8> kNeighbourOffsets{{
    {-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1},
}};

inline bool is_dissimilar(double sim, const SaliencyConfig& cfg) {
  return (cfg.use_absolute_dot ? std::abs(sim) : sim) < cfg.dissim_threshold;
}

// Number of in-bounds active neighbours whose weights are dissimilar to the
// centre's. Missing and inactive neighbours are skipped.
inline DissimilarCount count_dissimilar(const LayerWeightGrid& grid, int row, int col, const SaliencyConfig& cfg) {
  const auto& cells = grid.cells;
  if (!cells.contains(row, col)) throw ValidationError("count_dissimilar: cell out of bounds");
  const LearnedPatch& centre = cells(row, col);
  if (!centre.active()) return {0, true};
  int count = 0;
  for (const auto& [dr, dc] : kNeighbourOffsets) {
    const int r = row + dr;
    const int c = col + dc;
    if (!cells.contains(r, c) || !cells(r, c).active()) continue;
    if (is_dissimilar(similarity(centre.w, cells(r, c).w), cfg)) ++count;
  }
  return {count, false};
}

struct ChannelSaliency {
  CountGrid counts;  // summed over layers
  BoolGrid mask;     // counts > count_threshold
  long long incidences = 0;
};

inline ChannelSaliency channel_saliency(const std::vector<LayerWeightGrid>& layers, const SaliencyConfig& cfg) {
  if (layers.empty()) throw ValidationError("channel_saliency: no layers");
  const int rows = layers.front().cells.rows();
  const int cols = layers.front().cells.cols();
  for (const auto& layer : layers) {
    if (layer.cells.rows() != rows || layer.cells.cols() != cols)
      throw ValidationError("channel_saliency: layer grids differ in size");
  }

  std::vector<CountGrid> per_layer;
  per_layer.reserve(layers.size());
  ChannelSaliency out{CountGrid(rows, cols, 0), BoolGrid(rows, cols, 0), 0};
  for (const auto& layer : layers) {
    CountGrid& counts = per_layer.emplace_back(rows, cols, 0);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        counts(r, c) = count_dissimilar(layer, r, c, cfg).count;
        out.counts(r, c) += counts(r, c);
      }
    }
  }
  for (std::size_t i = 0; i < out.counts.size(); ++i) out.mask[i] = out.counts[i] > cfg.count_threshold;
  for (const auto& counts : per_layer)
    for (std::size_t i = 0; i < counts.size(); ++i) out.incidences += (out.mask[i] && counts[i] > 0);
  return out;
}

inline CountGrid aggregate_channels(const std::array<BoolGrid, 3>& masks) {
  const int rows = masks[0].rows();
  const int cols = masks[0].cols();
  for (const auto& m : masks) {
    if (m.rows() != rows || m.cols() != cols) throw ValidationError("aggregate_channels: mask sizes differ");
  }
  CountGrid freq(rows, cols, 0);
  for (const auto& m : masks)
    for (std::size_t i = 0; i < freq.size(); ++i) freq[i] += m[i];
  return freq;
}

struct CutoffResult {
  BoolGrid salient;
  double expected_value = 0.0;
};

// Keeps patches whose frequency reaches the chance level
// salient_total / total_patches. Frequency 0 is never salient.
inline CutoffResult expected_value_cutoff(const CountGrid& frequencies, long long salient_total, long long total_patches) {
  if (total_patches <= 0) throw ValidationError("expected_value_cutoff: total_patches must be > 0");
  CutoffResult out{BoolGrid(frequencies.rows(), frequencies.cols(), 0),
                   static_cast<double>(salient_total) / static_cast<double>(total_patches)};
  for (std::size_t i = 0; i < frequencies.size(); ++i) {
    const int f = frequencies[i];
    out.salient[i] = f > 0 && static_cast<double>(f) >= out.expected_value;
  }
  return out;
}

// Stage 2: lateral comparison over already-learned weight grids.
inline SaliencyGrid lateral_stage(const WeightGrids& weights, const SaliencyConfig& cfg) {
  cfg.validate();
  SaliencyGrid out;
  for (Channel ch : kChannels) {
    const int i = static_cast<int>(ch);
    ChannelSaliency cs = channel_saliency(weights[i], cfg);
    out.per_channel_counts[i] = std::move(cs.counts);
    out.channel_masks[i] = std::move(cs.mask);
    out.incidence_total += cs.incidences;
  }
  out.frequencies = aggregate_channels(out.channel_masks);

  long long numerator = out.incidence_total;
  if (cfg.cutoff_mode == CutoffMode::MeanFrequency) {
    numerator = 0;
    for (int f : out.frequencies) numerator += f;
  }
  auto cut = expected_value_cutoff(out.frequencies, numerator, static_cast<long long>(out.frequencies.size()));
  out.salient = std::move(cut.salient);
  out.expected_value = cut.expected_value;
  return out;
}

inline LayerWeightGrid learn_layer(const BinaryLayer& layer, const LearnConfig& learn, int patch_size) {
  const Grid<Patch> patches = tile_patches(layer, patch_size);
  LayerWeightGrid out{layer.channel, layer.layer_index, Grid<LearnedPatch>(patches.rows(), patches.cols())};
  for (int r = 0; r < patches.rows(); ++r) {
    for (int c = 0; c < patches.cols(); ++c) {
      const auto samples = patch_to_samples(patches(r, c));
      if (samples.size() < 2 || !has_two_distinct(samples)) continue;
      const bool isotropic = batch_pca_oracle(samples).isotropic;
      out.cells(r, c) = {oja_learn(samples, learn), isotropic ? PatchStatus::LowConfidence : PatchStatus::Active};
    }
  }
  return out;
}

// Stage 1: channel split, layer decomposition, tiling and per-patch learning.
inline WeightGrids learn_weight_grids(const RgbImage& padded, const LearnConfig& learn, int num_layers,
                                      int patch_size) {
  learn.validate();
  const auto planes = split_channels(padded);
  std::array<std::future<std::vector<LayerWeightGrid>>, 3> jobs;
  for (Channel ch : kChannels) {
    jobs[static_cast<int>(ch)] = std::async(std::launch::async, [&planes, &learn, ch, num_layers, patch_size] {
      std::vector<LayerWeightGrid> grids;
      for (const auto& layer : decompose_layers(planes[static_cast<int>(ch)], num_layers))
        grids.push_back(learn_layer(layer, learn, patch_size));
      return grids;
    });
  }
  WeightGrids out;
  for (int i = 0; i < 3; ++i) out[i] = jobs[i].get();
  return out;
}

struct Detection {
  WeightGrids weights;
  SaliencyGrid grid;
};

inline Detection detect_with_weights(const RgbImage& img, const SaliencyConfig& cfg, const LearnConfig& learn,
                                     int num_layers = kDefaultLayers, int patch_size = kDefaultPatchSize) {
  if (patch_size < 2) throw ValidationError("patch_size must be >= 2");
  if (num_layers < 1) throw ValidationError("num_layers must be >= 1");
  const RgbImage padded = pad_image(img, patch_size);
  Detection d;
  d.weights = learn_weight_grids(padded, learn, num_layers, patch_size);
  d.grid = lateral_stage(d.weights, cfg);
  d.grid.patch_size = patch_size;
  d.grid.image_width = padded.width();
  d.grid.image_height = padded.height();
  d.grid.source_width = padded.source_width;
  d.grid.source_height = padded.source_height;
  return d;
}

inline SaliencyGrid detect(const RgbImage& img, const SaliencyConfig& cfg, const LearnConfig& learn,
                           int num_layers = kDefaultLayers, int patch_size = kDefaultPatchSize) {
  return detect_with_weights(img, cfg, learn, num_layers, patch_size).grid;
}

}  // namespace hebbsal
