#pragma once

// Independent reference computations used only by tests. Nothing here calls
// into the code paths it is used to check.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "hebbsal/lateral.hpp"

namespace hebbsal::testing {

// Layer membership from exact integer arithmetic: v/255 lies in (j/n, (j+1)/n]
// iff 255*j < v*n <= 255*(j+1).
inline bool in_layer_exact(int v8, int j, int n) {
  const long long scaled = static_cast<long long>(v8) * n;
  return 255LL * j < scaled && scaled <= 255LL * (j + 1);
}

// Oja update written in the rearranged form w*(1 - mu*y^2) + mu*y*x, evaluated
// in long double.
inline std::array<long double, 2> oja_step_reference(std::array<long double, 2> w, std::array<long double, 2> x,
                                                     long double mu) {
  const long double y = w[0] * x[0] + w[1] * x[1];
  const long double shrink = 1.0L - mu * y * y;
  return {w[0] * shrink + mu * y * x[0], w[1] * shrink + mu * y * x[1]};
}

inline std::array<long double, 2> hebbian_step_reference(std::array<long double, 2> w, std::array<long double, 2> x,
                                                         long double mu, long double alpha) {
  const long double y = w[0] * x[0] + w[1] * x[1];
  const long double keep = 1.0L - mu * alpha;
  return {w[0] * keep + mu * y * x[0], w[1] * keep + mu * y * x[1]};
}

struct GaussianCloud {
  std::vector<Vec2> samples;  // centred
  Vec2 true_pc1;
  double ratio = 0.0;
};

// Zero-mean 2-D Gaussian with principal axis at `angle` and variances
// (major, major/ratio); the returned samples are re-centred on their mean.
inline GaussianCloud gaussian_cloud(std::mt19937_64& rng, int n, double major, double ratio, double angle) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double c = std::cos(angle), s = std::sin(angle);
  const double sd1 = std::sqrt(major), sd2 = std::sqrt(major / ratio);
  GaussianCloud cloud;
  cloud.true_pc1 = {c, s};
  cloud.ratio = ratio;
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = normal(rng) * sd1;
    const double b = normal(rng) * sd2;
    cloud.samples.push_back({a * c - b * s, a * s + b * c});
    mx += cloud.samples.back().x;
    my += cloud.samples.back().y;
  }
  mx /= n;
  my /= n;
  for (auto& p : cloud.samples) {
    p.x -= mx;
    p.y -= my;
  }
  return cloud;
}

// Symmetric 2x2 eigen-solve by Jacobi rotation, as a second route to the
// closed-form oracle. Returns the unit leading eigenvector (sign arbitrary).
inline Vec2 leading_eigenvector_jacobi(const std::vector<Vec2>& samples) {
  long double mx = 0, my = 0;
  for (const auto& s : samples) {
    mx += s.x;
    my += s.y;
  }
  mx /= samples.size();
  my /= samples.size();
  long double a = 0, b = 0, c = 0;
  for (const auto& s : samples) {
    a += (s.x - mx) * (s.x - mx);
    b += (s.x - mx) * (s.y - my);
    c += (s.y - my) * (s.y - my);
  }
  const long double theta = 0.5L * std::atan2(2.0L * b, a - c);
  return {static_cast<double>(std::cos(theta)), static_cast<double>(std::sin(theta))};
}

struct BruteStage2 {
  std::array<CountGrid, 3> counts;
  std::array<BoolGrid, 3> masks;
  CountGrid frequencies;
  BoolGrid salient;
  long long incidences = 0;
  double expected_value = 0.0;
};

// Exhaustive Stage-2 recomputation: neighbours are found by scanning the whole
// grid for cells at Chebyshev distance 1.
inline BruteStage2 brute_force_stage2(const WeightGrids& weights, const SaliencyConfig& cfg) {
  const int rows = weights[0].front().cells.rows();
  const int cols = weights[0].front().cells.cols();
  BruteStage2 out;
  out.frequencies = CountGrid(rows, cols, 0);
  for (int ch = 0; ch < 3; ++ch) {
    out.counts[ch] = CountGrid(rows, cols, 0);
    out.masks[ch] = BoolGrid(rows, cols, 0);
    std::vector<CountGrid> per_layer;
    for (const auto& layer : weights[ch]) {
      CountGrid lc(rows, cols, 0);
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
          const auto& centre = layer.cells(r, c);
          if (centre.status == PatchStatus::Inactive) continue;
          for (int r2 = 0; r2 < rows; ++r2) {
            for (int c2 = 0; c2 < cols; ++c2) {
              if (std::max(std::abs(r2 - r), std::abs(c2 - c)) != 1) continue;
              const auto& other = layer.cells(r2, c2);
              if (other.status == PatchStatus::Inactive) continue;
              double s = centre.w.x * other.w.x + centre.w.y * other.w.y;
              if (cfg.use_absolute_dot) s = std::fabs(s);
              if (s < cfg.dissim_threshold) lc(r, c) += 1;
            }
          }
          out.counts[ch](r, c) += lc(r, c);
        }
      }
      per_layer.push_back(lc);
    }
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) out.masks[ch](r, c) = out.counts[ch](r, c) > cfg.count_threshold ? 1 : 0;
    for (const auto& lc : per_layer)
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
          if (out.masks[ch](r, c) == 1 && lc(r, c) > 0) ++out.incidences;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) out.frequencies(r, c) += out.masks[ch](r, c);
  }
  long long numerator = out.incidences;
  if (cfg.cutoff_mode == CutoffMode::MeanFrequency) {
    numerator = 0;
    for (int f : out.frequencies) numerator += f;
  }
  out.expected_value = static_cast<double>(numerator) / static_cast<double>(rows * cols);
  out.salient = BoolGrid(rows, cols, 0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int f = out.frequencies(r, c);
      out.salient(r, c) = (f >= 1 && f >= out.expected_value) ? 1 : 0;
    }
  return out;
}

// Random unit vector, or an exact axis / near-threshold vector, to exercise
// boundary cases of the dissimilarity rule.
inline LearnedPatch random_cell(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double pick = u(rng);
  if (pick < 0.15) return {{}, PatchStatus::Inactive};
  double angle = u(rng) * 2.0 * 3.14159265358979323846;
  if (pick < 0.35) angle = std::floor(u(rng) * 4.0) * 0.5 * 3.14159265358979323846;
  const PatchStatus status = u(rng) < 0.1 ? PatchStatus::LowConfidence : PatchStatus::Active;
  return {{std::cos(angle), std::sin(angle)}, status};
}

inline WeightGrids random_weight_grids(std::mt19937_64& rng, int rows, int cols, int layers) {
  WeightGrids w;
  for (int ch = 0; ch < 3; ++ch) {
    for (int l = 0; l < layers; ++l) {
      LayerWeightGrid g{static_cast<Channel>(ch), l, Grid<LearnedPatch>(rows, cols)};
      for (auto& cell : g.cells) cell = random_cell(rng);
      w[ch].push_back(std::move(g));
    }
  }
  return w;
}

}  // namespace hebbsal::testing
