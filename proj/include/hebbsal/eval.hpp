#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "image.hpp"
#include "ingest.hpp"

namespace hebbsal {

// A metric whose denominator may be zero; nullopt means not applicable.
using Metric = std::optional<double>;

struct PatchCoord {
  int row = 0;
  int col = 0;
  friend auto operator<=>(const PatchCoord&, const PatchCoord&) = default;
};

struct PatchClassification {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  std::vector<PatchCoord> tp_set;
  std::vector<PatchCoord> fp_set;
  std::vector<PatchCoord> fn_set;
};

namespace detail {

inline int patch_size_for(const BoolGrid& salient, const RoiMap& roi) {
  if (salient.rows() == 0 || salient.cols() == 0) throw ValidationError("salient grid is empty");
  if (roi.width() % salient.cols() != 0 || roi.height() % salient.rows() != 0) {
    throw ValidationError("ROI map dimensions are not a multiple of the patch grid");
  }
  const int ps = roi.width() / salient.cols();
  if (ps != roi.height() / salient.rows() || ps < 1) {
    throw ValidationError("ROI map dimensions do not match the patch grid");
  }
  return ps;
}

// Per-patch sum of f(count) over the patch footprint.
template <typename F>
Grid<std::uint64_t> patch_sums(const RoiMap& roi, int rows, int cols, int ps, F f) {
  Grid<std::uint64_t> sums(rows, cols, 0);
  for (int y = 0; y < roi.height(); ++y)
    for (int x = 0; x < roi.width(); ++x) sums(y / ps, x / ps) += f(roi.counts(y, x));
  return sums;
}

}  // namespace detail

// Patch footprint is roi size / grid size; a patch is ROI-positive when any of
// its pixels has a nonzero count.
inline PatchClassification classify_patches(const BoolGrid& salient, const RoiMap& roi) {
  const int ps = detail::patch_size_for(salient, roi);
  const auto positive = detail::patch_sums(roi, salient.rows(), salient.cols(), ps,
                                           [](std::uint32_t v) -> std::uint64_t { return v != 0; });
  PatchClassification c;
  for (int r = 0; r < salient.rows(); ++r) {
    for (int col = 0; col < salient.cols(); ++col) {
      const bool sel = salient(r, col) != 0;
      const bool pos = positive(r, col) != 0;
      if (sel && pos) {
        ++c.tp;
        c.tp_set.push_back({r, col});
      } else if (sel) {
        ++c.fp;
        c.fp_set.push_back({r, col});
      } else if (pos) {
        ++c.fn;
        c.fn_set.push_back({r, col});
      }
    }
  }
  return c;
}

inline Metric precision(const PatchClassification& c) {
  if (c.tp + c.fp == 0) return std::nullopt;
  return static_cast<double>(c.tp) / (c.tp + c.fp);
}

inline Metric recall(const PatchClassification& c) {
  if (c.tp + c.fn == 0) return std::nullopt;
  return static_cast<double>(c.tp) / (c.tp + c.fn);
}

// Share of the normalized ROI density that falls inside selected patches.
inline Metric weighted_precision(const BoolGrid& salient, const RoiMap& roi) {
  const int ps = detail::patch_size_for(salient, roi);
  const auto mass = detail::patch_sums(roi, salient.rows(), salient.cols(), ps,
                                       [](std::uint32_t v) -> std::uint64_t { return v; });
  std::uint64_t total = 0;
  std::uint64_t selected = 0;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    total += mass[i];
    if (salient[i]) selected += mass[i];
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(selected) / static_cast<double>(total);
}

struct WeightedRecallParts {
  std::uint64_t tp_mass = 0;
  std::uint64_t fn_mass = 0;
  std::uint64_t fp_mass = 0;
};

// Patch masses V(p) = sum over the patch of (count + 1), split by class.
inline WeightedRecallParts weighted_recall_parts(const BoolGrid& salient, const RoiMap& roi) {
  const int ps = detail::patch_size_for(salient, roi);
  const auto mass = detail::patch_sums(roi, salient.rows(), salient.cols(), ps,
                                       [](std::uint32_t v) -> std::uint64_t { return std::uint64_t{v} + 1; });
  const auto positive = detail::patch_sums(roi, salient.rows(), salient.cols(), ps,
                                           [](std::uint32_t v) -> std::uint64_t { return v != 0; });
  WeightedRecallParts parts;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    const bool sel = salient[i] != 0;
    const bool pos = positive[i] != 0;
    if (sel && pos) parts.tp_mass += mass[i];
    else if (sel) parts.fp_mass += mass[i];
    else if (pos) parts.fn_mass += mass[i];
  }
  return parts;
}

// Recall with each ROI-positive patch weighted by its +1-shifted count mass.
inline Metric weighted_recall(const BoolGrid& salient, const RoiMap& roi) {
  const auto parts = weighted_recall_parts(salient, roi);
  if (parts.tp_mass + parts.fn_mass == 0) return std::nullopt;
  return static_cast<double>(parts.tp_mass) / static_cast<double>(parts.tp_mass + parts.fn_mass);
}

struct EvalReport {
  std::string image;
  PatchClassification classes;
  Metric recall;
  Metric precision;
  Metric weighted_recall;
  Metric weighted_precision;
  // tp + fp patch mass after the +1 shift. Diagnostic only; the weighted
  // recall above uses tp + fn.
  std::uint64_t literal_tp_fp_mass = 0;
};

inline EvalReport evaluate(std::string image, const BoolGrid& salient, const RoiMap& roi) {
  EvalReport rep;
  rep.image = std::move(image);
  rep.classes = classify_patches(salient, roi);
  rep.recall = recall(rep.classes);
  rep.precision = precision(rep.classes);
  rep.weighted_recall = weighted_recall(salient, roi);
  rep.weighted_precision = weighted_precision(salient, roi);
  const auto parts = weighted_recall_parts(salient, roi);
  rep.literal_tp_fp_mass = parts.tp_mass + parts.fp_mass;
  return rep;
}

struct MetricAverages {
  Metric recall;
  Metric precision;
  Metric weighted_recall;
  Metric weighted_precision;
};

// Column means over defined entries only.
inline MetricAverages average(const std::vector<EvalReport>& reports) {
  auto mean = [&](Metric EvalReport::*field) -> Metric {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : reports) {
      if (const auto& m = r.*field) {
        sum += *m;
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return sum / n;
  };
  return {mean(&EvalReport::recall), mean(&EvalReport::precision), mean(&EvalReport::weighted_recall),
          mean(&EvalReport::weighted_precision)};
}

// Blue-to-red ramp for t in [0,1].
inline Rgb heat_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  if (t < 0.5) return {0.0, 2.0 * t, 1.0 - 2.0 * t};
  return {2.0 * t - 1.0, 2.0 - 2.0 * t, 0.0};
}

// Source image with optional ROI heat underneath and a one-pixel outline
// around every salient patch.
inline RgbImage render_overlay(const RgbImage& img, const BoolGrid& salient, const RoiMap* roi = nullptr,
                               Rgb outline = {0.0, 1.0, 0.0}) {
  if (salient.rows() == 0 || img.width() % salient.cols() != 0 || img.height() % salient.rows() != 0) {
    throw ValidationError("overlay: image is not a whole number of patches");
  }
  const int ps = img.width() / salient.cols();
  if (ps != img.height() / salient.rows()) throw ValidationError("overlay: image and patch grid disagree");

  RgbImage out = img;
  if (roi) {
    if (roi->width() != img.width() || roi->height() != img.height())
      throw ValidationError("overlay: ROI map and image differ in size");
    std::uint32_t peak = 0;
    for (auto v : roi->counts) peak = std::max(peak, v);
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) {
        const auto v = roi->counts(y, x);
        if (v == 0) continue;
        const Rgb h = heat_color(static_cast<double>(v) / peak);
        const Rgb p = img.at(x, y);
        out.at(x, y) = {0.5 * p.r + 0.5 * h.r, 0.5 * p.g + 0.5 * h.g, 0.5 * p.b + 0.5 * h.b};
      }
    }
  }
  for (int r = 0; r < salient.rows(); ++r) {
    for (int c = 0; c < salient.cols(); ++c) {
      if (!salient(r, c)) continue;
      const int x0 = c * ps, y0 = r * ps, x1 = x0 + ps - 1, y1 = y0 + ps - 1;
      for (int i = 0; i < ps; ++i) {
        out.at(x0 + i, y0) = outline;
        out.at(x0 + i, y1) = outline;
        out.at(x0, y0 + i) = outline;
        out.at(x1, y0 + i) = outline;
      }
    }
  }
  return out;
}

// Binary mask upsampled so each patch becomes a patch_size square.
inline BoolGrid upsample_mask(const BoolGrid& salient, int patch_size) {
  BoolGrid out(salient.rows() * patch_size, salient.cols() * patch_size, 0);
  for (int y = 0; y < out.rows(); ++y)
    for (int x = 0; x < out.cols(); ++x) out(y, x) = salient(y / patch_size, x / patch_size);
  return out;
}

}  // namespace hebbsal
