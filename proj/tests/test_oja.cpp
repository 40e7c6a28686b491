#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hebbsal/oja.hpp"
#include "support/oracles.hpp"

using namespace hebbsal;
namespace ht = hebbsal::testing;

namespace {

void expect_vec_near(Vec2 got, Vec2 want, double tol = 1e-12) {
  EXPECT_NEAR(got.x, want.x, tol);
  EXPECT_NEAR(got.y, want.y, tol);
}

Patch patch_with(std::initializer_list<std::pair<int, int>> bits, int ps = 16) {
  Patch p;
  p.bits = BoolGrid(ps, ps, 0);
  for (auto [r, c] : bits) {
    p.bits(r, c) = 1;
    ++p.active_count;
  }
  return p;
}

}  // namespace

TEST(NeuronOutput, DotProduct) {
  EXPECT_EQ(neuron_output({1, 0}, {3, 7}), 3.0);
  EXPECT_EQ(neuron_output({0, 0}, {3, 7}), 0.0);
  EXPECT_NEAR(neuron_output({0.6, 0.8}, {1, 1}), 1.4, 1e-15);
}

TEST(HebbianStep, Examples) {
  expect_vec_near(hebbian_step({1, 0}, {0, 0}, 0.1, 1.0), {0.9, 0});
  expect_vec_near(hebbian_step({1, 0}, {1, 0}, 0.1, 0.0), {1.1, 0});
  // y = 2, dw = 0.1 * (2*2 - 1*1) = 0.3
  expect_vec_near(hebbian_step({1, 0}, {2, 0}, 0.1, 1.0), {1.3, 0});
}

TEST(HebbianStep, WithoutForgettingNormGrowsMonotonically) {
  WeightVector w{0.3, -0.2};
  const CoordinateSample x{1.5, 0.5};
  double prev = norm(w);
  for (int i = 0; i < 200; ++i) {
    w = hebbian_step(w, x, 0.05, 0.0);
    const double now = norm(w);
    ASSERT_GT(now, prev) << "step " << i;
    prev = now;
  }
}

TEST(OjaStep, Examples) {
  expect_vec_near(oja_step({1, 0}, {0, 0}, 0.1), {1, 0});
  expect_vec_near(oja_step({1, 0}, {1, 0}, 0.1), {1, 0});
  // y = 0.5, dw = 0.1 * (0.5 - 0.25 * 0.5) = 0.0375
  expect_vec_near(oja_step({0.5, 0}, {1, 0}, 0.1), {0.5375, 0});
}

TEST(OjaStep, FixedPointWhenUpdateVanishes) {
  // y*x == y^2*w componentwise whenever x == y*w, i.e. x lies on the unit w line.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double a = u(rng) * 3.14159;
    const WeightVector w{std::cos(a), std::sin(a)};
    const double t = 5.0 * u(rng);
    const CoordinateSample x{t * w.x, t * w.y};
    expect_vec_near(oja_step(w, x, 0.03), w, 1e-12);
  }
}

TEST(OjaStep, MatchesReferenceCalculator) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    const WeightVector w{u(rng), u(rng)};
    const CoordinateSample x{u(rng), u(rng)};
    const double mu = 0.001 + std::abs(u(rng)) * 0.05;
    const auto ref = ht::oja_step_reference({w.x, w.y}, {x.x, x.y}, mu);
    const auto got = oja_step(w, x, mu);
    EXPECT_NEAR(got.x, static_cast<double>(ref[0]), 1e-12 * std::max(1.0, std::abs(got.x)));
    EXPECT_NEAR(got.y, static_cast<double>(ref[1]), 1e-12 * std::max(1.0, std::abs(got.y)));
  }
}

TEST(PatchToSamples, Examples) {
  EXPECT_TRUE(patch_to_samples(patch_with({})).empty());

  auto s = patch_to_samples(patch_with({{5, 5}}));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0], (Vec2{0, 0}));

  s = patch_to_samples(patch_with({{0, 0}, {0, 15}}));
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0], (Vec2{-7.5, 0}));
  EXPECT_EQ(s[1], (Vec2{7.5, 0}));
}

TEST(PatchToSamples, CentredOnActivePixels) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Patch p;
    p.bits = BoolGrid(16, 16, 0);
    for (auto& b : p.bits) {
      b = (rng() % 3) == 0;
      p.active_count += b;
    }
    const auto s = patch_to_samples(p);
    ASSERT_EQ(static_cast<int>(s.size()), p.active_count);
    double mx = 0, my = 0;
    for (auto v : s) {
      mx += v.x;
      my += v.y;
    }
    if (!s.empty()) {
      EXPECT_NEAR(mx / s.size(), 0.0, 1e-9);
      EXPECT_NEAR(my / s.size(), 0.0, 1e-9);
    }
  }
}

TEST(BatchPcaOracle, Examples) {
  std::vector<Vec2> s{{-1, 0}, {1, 0}};
  expect_vec_near(batch_pca_oracle(s).pc1, {1, 0});

  s = {{-1, -1}, {1, 1}};
  expect_vec_near(batch_pca_oracle(s).pc1, {std::sqrt(0.5), std::sqrt(0.5)});

  // covariance diag(0.25, 1.0)
  s = {{0, 0}, {1, 0}, {0, 2}, {1, 2}};
  const auto r = batch_pca_oracle(s);
  expect_vec_near(r.pc1, {0, 1});
  EXPECT_NEAR(r.lambda1, 1.0, 1e-15);
  EXPECT_NEAR(r.lambda2, 0.25, 1e-15);
  EXPECT_FALSE(r.isotropic);
}

TEST(BatchPcaOracle, SignConventionAndDegenerateInputs) {
  std::vector<Vec2> s{{-1, 1}, {1, -1}};
  const auto pc = batch_pca_oracle(s).pc1;
  EXPECT_GT(pc.x, 0.0);
  EXPECT_LT(pc.y, 0.0);

  s = {{0, -3}, {0, 3}};
  EXPECT_EQ(batch_pca_oracle(s).pc1, (Vec2{0, 1}));

  s = {{2, 2}, {2, 2}, {2, 2}};
  EXPECT_THROW(batch_pca_oracle(s), DegenerateInput);
  s.clear();
  EXPECT_THROW(batch_pca_oracle(s), DegenerateInput);
}

TEST(BatchPcaOracle, FullPatchIsIsotropic) {
  Patch p;
  p.bits = BoolGrid(16, 16, 1);
  p.active_count = 256;
  const auto samples = patch_to_samples(p);
  EXPECT_TRUE(batch_pca_oracle(samples).isotropic);
}

TEST(BatchPcaOracle, AgreesWithJacobiRotation) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> angle(0.0, 3.14159265358979);
  for (int i = 0; i < 200; ++i) {
    auto cloud = ht::gaussian_cloud(rng, 50, 1.0 + i % 5, 1.5 + (i % 7), angle(rng));
    const auto a = batch_pca_oracle(cloud.samples).pc1;
    const auto b = ht::leading_eigenvector_jacobi(cloud.samples);
    EXPECT_LT(line_angle_deg(a, b), 1e-6);
  }
}

TEST(OjaLearn, AxisAlignedSamples) {
  std::vector<Vec2> s{{-2, 0}, {-1, 0}, {1, 0}, {2, 0}};
  const auto w = oja_learn(s, LearnConfig{});
  EXPECT_LT(line_angle_deg(w, {1, 0}), 1.0);
}

TEST(OjaLearn, ReferenceSettingFiveEpochs) {
  // 500 samples around pc1 = (-0.4847, 0.8747), init (0.1, 0.5), five presentations.
  std::mt19937_64 rng(2024);
  const Vec2 pc1{-0.4847, 0.8747};
  const double angle = std::atan2(pc1.y, pc1.x);
  const auto cloud = ht::gaussian_cloud(rng, 500, 1.0, 50.0, angle);
  const auto w = oja_learn(cloud.samples, LearnConfig{});
  EXPECT_LT(line_angle_deg(w, pc1), 1.0);
  EXPECT_GE(norm(w), 0.99);
  EXPECT_LE(norm(w), 1.01);
}

TEST(OjaLearn, AgreesWithOracleOnWellConditionedClouds) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> angle(0.0, 3.14159265358979);
  for (int i = 0; i < 20; ++i) {
    const auto cloud = ht::gaussian_cloud(rng, 200, 4.0, 2.0 + i, angle(rng));
    LearnConfig cfg;
    cfg.seed = i;
    const auto w = oja_learn(cloud.samples, cfg);
    EXPECT_LT(line_angle_deg(w, batch_pca_oracle(cloud.samples).pc1), 1.0) << "cloud " << i;
    EXPECT_NEAR(norm(w), 1.0, 0.01);
  }
}

TEST(OjaLearn, Deterministic) {
  std::mt19937_64 rng(1);
  const auto cloud = ht::gaussian_cloud(rng, 300, 1.0, 3.0, 0.7);
  LearnConfig cfg;
  cfg.seed = 42;
  const auto a = oja_learn(cloud.samples, cfg);
  const auto b = oja_learn(cloud.samples, cfg);
  EXPECT_EQ(a, b);
  cfg.seed = 43;
  EXPECT_NE(oja_learn(cloud.samples, cfg), a);
}

TEST(OjaLearn, ScaleInvariantDirection) {
  std::mt19937_64 rng(8);
  const auto cloud = ht::gaussian_cloud(rng, 300, 1.0, 6.0, 1.1);
  auto scaled = cloud.samples;
  for (auto& s : scaled) s = {s.x * 37.0, s.y * 37.0};
  const LearnConfig cfg;
  EXPECT_LT(line_angle_deg(oja_learn(cloud.samples, cfg), oja_learn(scaled, cfg)), 1e-6);
}

TEST(OjaLearn, RejectsDegenerateInput) {
  std::vector<Vec2> s;
  EXPECT_THROW(oja_learn(s, LearnConfig{}), DegenerateInput);
  s = {{1, 1}};
  EXPECT_THROW(oja_learn(s, LearnConfig{}), DegenerateInput);
  s = {{1, 1}, {1, 1}};
  EXPECT_THROW(oja_learn(s, LearnConfig{}), DegenerateInput);
}

TEST(OjaLearn, RejectsInvalidConfig) {
  std::vector<Vec2> s{{-1, 0}, {1, 0}};
  LearnConfig cfg;
  cfg.mu = 0.0;
  EXPECT_THROW(oja_learn(s, cfg), ValidationError);
  cfg = {};
  cfg.epochs = 0;
  EXPECT_THROW(oja_learn(s, cfg), ValidationError);
  cfg = {};
  cfg.init = {0, 0};
  EXPECT_THROW(oja_learn(s, cfg), ValidationError);
}

TEST(OjaLearn, ConstantRateRawCoordinatesStillConvergesOnThinStroke) {
  // Plain learner (constant mu, raw pixel offsets, no update floor) on a rank-one stroke.
  std::vector<Vec2> s;
  for (int c = 0; c < 14; ++c) s.push_back({c - 6.5, 0.0});
  LearnConfig cfg;
  cfg.input_scale = 0.0;
  cfg.anneal_steps = 0.0;
  cfg.min_updates = 0;
  EXPECT_LT(line_angle_deg(oja_learn(s, cfg), {1, 0}), 1.0);
}
