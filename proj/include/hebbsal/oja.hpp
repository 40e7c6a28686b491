#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "errors.hpp"
#include "ingest.hpp"

namespace hebbsal {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

// Smallest angle in degrees between the lines spanned by a and b (sign ignored).
inline double line_angle_deg(Vec2 a, Vec2 b) {
  const double cross = a.x * b.y - a.y * b.x;
  return std::atan2(std::abs(cross), std::abs(dot(a, b))) * 180.0 / std::numbers::pi;
}

// Pixel coordinates relative to the active-pixel centroid: x is the column
// offset, y the row offset.
using CoordinateSample = Vec2;

// Synaptic weights (w1, w2) of a two-input neuron.
using WeightVector = Vec2;

struct LearnConfig {
  double mu = 0.01;
  int epochs = 5;
  double alpha = 1.0;  // forgetting rate, plain Hebbian rule only
  std::uint64_t seed = 0;
  WeightVector init{0.1, 0.5};
  // Samples are rescaled so their mean squared radius equals this value; 0 feeds
  // raw coordinates.
  double input_scale = 16.0;
  // Rate at step k is mu / (1 + k / anneal_steps); 0 keeps mu constant.
  double anneal_steps = 50.0;
  // Small sample sets get extra whole epochs until at least this many updates run.
  int min_updates = 2500;

  void validate() const {
    if (!(mu > 0.0)) throw ValidationError("learn.mu must be > 0");
    if (epochs < 1) throw ValidationError("learn.epochs must be >= 1");
    if (!(input_scale >= 0.0)) throw ValidationError("learn.input_scale must be >= 0");
    if (!(anneal_steps >= 0.0)) throw ValidationError("learn.anneal_steps must be >= 0");
    if (min_updates < 0) throw ValidationError("learn.min_updates must be >= 0");
    if (!(norm(init) > 0.0)) throw ValidationError("learn.init must be nonzero");
  }
};

inline double neuron_output(WeightVector w, CoordinateSample x) { return dot(w, x); }

inline WeightVector hebbian_step(WeightVector w, CoordinateSample x, double mu, double alpha) {
  const double y = neuron_output(w, x);
  return {w.x + mu * (y * x.x - alpha * w.x), w.y + mu * (y * x.y - alpha * w.y)};
}

inline WeightVector oja_step(WeightVector w, CoordinateSample x, double mu) {
  const double y = neuron_output(w, x);
  const double y2 = y * y;
  return {w.x + mu * (y * x.x - y2 * w.x), w.y + mu * (y * x.y - y2 * w.y)};
}

inline std::vector<CoordinateSample> patch_to_samples(const Patch& p) {
  std::vector<CoordinateSample> samples;
  if (p.active_count == 0) return samples;
  samples.reserve(p.active_count);
  double sum_col = 0.0;
  double sum_row = 0.0;
  for (int r = 0; r < p.bits.rows(); ++r) {
    for (int c = 0; c < p.bits.cols(); ++c) {
      if (p.bits(r, c)) {
        samples.push_back({static_cast<double>(c), static_cast<double>(r)});
        sum_col += c;
        sum_row += r;
      }
    }
  }
  const double n = static_cast<double>(samples.size());
  const double mean_col = sum_col / n;
  const double mean_row = sum_row / n;
  for (auto& s : samples) {
    s.x -= mean_col;
    s.y -= mean_row;
  }
  return samples;
}

inline bool has_two_distinct(std::span<const CoordinateSample> samples) {
  for (const auto& s : samples)
    if (!(s == samples.front())) return true;
  return false;
}

struct PcaResult {
  WeightVector pc1;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  bool isotropic = false;  // lambda1 == lambda2: every direction is a principal component
};

// Closed-form leading eigenvector of the 2x2 sample covariance. The sign is
// fixed so that the first nonzero component is positive.
inline PcaResult batch_pca_oracle(std::span<const CoordinateSample> samples) {
  if (samples.empty() || !has_two_distinct(samples)) {
    throw DegenerateInput("principal component undefined: fewer than 2 distinct samples");
  }
  const double n = static_cast<double>(samples.size());
  double mx = 0.0, my = 0.0;
  for (const auto& s : samples) {
    mx += s.x;
    my += s.y;
  }
  mx /= n;
  my /= n;
  double a = 0.0, b = 0.0, c = 0.0;
  for (const auto& s : samples) {
    const double dx = s.x - mx;
    const double dy = s.y - my;
    a += dx * dx;
    b += dx * dy;
    c += dy * dy;
  }
  a /= n;
  b /= n;
  c /= n;

  const double mid = 0.5 * (a + c);
  const double rad = std::hypot(0.5 * (a - c), b);
  PcaResult out;
  out.lambda1 = mid + rad;
  out.lambda2 = mid - rad;
  if (!(out.lambda1 > 0.0)) throw DegenerateInput("principal component undefined: zero covariance");
  out.isotropic = (out.lambda1 - out.lambda2) <= 1e-9 * out.lambda1;

  WeightVector v;
  if (out.isotropic || b == 0.0) {
    v = (a >= c) ? WeightVector{1.0, 0.0} : WeightVector{0.0, 1.0};
  } else {
    // Two algebraically equivalent eigenvector forms; keep the better-conditioned one.
    const WeightVector v1{b, out.lambda1 - a};
    const WeightVector v2{out.lambda1 - c, b};
    v = norm(v1) >= norm(v2) ? v1 : v2;
  }
  const double len = norm(v);
  v = {v.x / len, v.y / len};
  if (v.x < 0.0 || (v.x == 0.0 && v.y < 0.0)) v = {-v.x, -v.y};
  if (v.x == 0.0) v.x = 0.0;  // drop negative zero
  if (v.y == 0.0) v.y = 0.0;
  out.pc1 = v;
  return out;
}

namespace detail {

// Unbiased draw from [0, bound) using rejection on the raw 64-bit engine output,
// so shuffles are identical across standard library implementations.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return draw % bound;
}

inline void shuffle(std::vector<std::size_t>& order, std::mt19937_64& rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = uniform_below(rng, i);
    std::swap(order[i - 1], order[j]);
  }
}

}  // namespace detail

// Online estimate of the first principal component with Oja's rule.
//
// Each epoch presents every sample once in a freshly shuffled order. The weight
// vector starts at cfg.init scaled to unit length. Samples are uniformly
// rescaled to mean squared radius cfg.input_scale, which leaves the principal
// direction unchanged but makes the step size independent of patch geometry.
inline WeightVector oja_learn(std::span<const CoordinateSample> samples, const LearnConfig& cfg) {
  cfg.validate();
  if (samples.empty() || !has_two_distinct(samples)) {
    throw DegenerateInput("oja_learn needs at least 2 distinct samples");
  }

  double gain = 1.0;
  if (cfg.input_scale > 0.0) {
    double mean_sq = 0.0;
    for (const auto& s : samples) mean_sq += dot(s, s);
    mean_sq /= static_cast<double>(samples.size());
    if (mean_sq > 0.0) gain = std::sqrt(cfg.input_scale / mean_sq);
  }

  const double init_len = norm(cfg.init);
  WeightVector w{cfg.init.x / init_len, cfg.init.y / init_len};

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const std::size_t n = samples.size();
  const std::size_t epochs =
      std::max(static_cast<std::size_t>(cfg.epochs), (static_cast<std::size_t>(cfg.min_updates) + n - 1) / n);
  std::uint64_t step = 0;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    detail::shuffle(order, rng);
    for (std::size_t idx : order) {
      const CoordinateSample x{samples[idx].x * gain, samples[idx].y * gain};
      const double mu = cfg.anneal_steps > 0.0 ? cfg.mu / (1.0 + static_cast<double>(step) / cfg.anneal_steps)
                                               : cfg.mu;
      w = oja_step(w, x, mu);
      ++step;
    }
  }
  return w;
}

}  // namespace hebbsal
