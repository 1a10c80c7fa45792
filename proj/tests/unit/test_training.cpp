/* Copyright 2026 The featlock Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <gtest/gtest.h>

#include <cmath>

#include "featlock/checkpoint.hpp"
#include "featlock/data.hpp"
#include "featlock/errors.hpp"
#include "featlock/training.hpp"
#include "multibox_fixture.hpp"
#include "test_support.hpp"

namespace featlock {
namespace {

using Fixture = testing::MultiboxFixture;

TEST(SmoothL1, ClosedFormValues) {
  EXPECT_EQ(smooth_l1(0.0), 0.0);
  EXPECT_EQ(smooth_l1(1.0), 0.5);
  EXPECT_EQ(smooth_l1(2.5), 2.0);
  EXPECT_EQ(smooth_l1(-2.5), 2.0);
  EXPECT_EQ(smooth_l1(0.5), 0.125);
}

TEST(SmoothL1, GradientMatchesFiniteDifferences) {
  for (double u : {-3.0, -0.7, -0.2, 0.0, 0.3, 0.9, 1.7}) {
    const double h = 1e-6;
    EXPECT_NEAR(smooth_l1_grad(u), (smooth_l1(u + h) - smooth_l1(u - h)) / (2 * h), 1e-6) << u;
  }
}

TEST(Matching, ThresholdAndForcedBestPrior) {
  const Fixture f;
  const MatchResult m = match_priors(f.priors, f.gt);
  EXPECT_EQ(m.labels, (std::vector<int>{2, 0, 0, 0}));
  EXPECT_EQ(m.num_positive(), 1u);
  EXPECT_NEAR(m.targets[0][0], 0.05, 1e-12);
  EXPECT_NEAR(m.targets[0][2], std::log(0.9), 1e-12);
}

TEST(Matching, LowOverlapGroundTruthStillClaimsBestPrior) {
  const std::vector<PriorBox> priors{{0.2, 0.2, 0.4, 0.4}, {0.7, 0.7, 0.6, 0.6}, {0.5, 0.5, 0.2, 0.2}};
  const std::vector<Object> gt{{{0.45, 0.45, 0.52, 0.52}, 0, false}};
  // IoUs are below 0.5 everywhere; prior 2 overlaps most.
  const MatchResult m = match_priors(priors, gt);
  EXPECT_EQ(m.labels, (std::vector<int>{0, 0, 1}));
}

TEST(Matching, MatchesExhaustiveOracle) {
  Rng rng(19);
  for (int t = 0; t < 300; ++t) {
    std::vector<PriorBox> priors;
    for (int p = 0; p < 3; ++p)
      priors.push_back({rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), rng.uniform(0.1, 0.5), rng.uniform(0.1, 0.5)});
    const double x0 = rng.uniform(0, 0.6), y0 = rng.uniform(0, 0.6);
    const std::vector<Object> gt{{{x0, y0, x0 + rng.uniform(0.05, 0.4), y0 + rng.uniform(0.05, 0.4)}, 2, false}};
    const MatchResult m = match_priors(priors, gt);
    double best = -1;
    std::size_t arg = 0;
    for (std::size_t p = 0; p < 3; ++p) {
      const double o = iou(to_corner(priors[p]), gt[0].box);
      if (o > best) best = o, arg = p;
    }
    for (std::size_t p = 0; p < 3; ++p) {
      const bool expect = p == arg || iou(to_corner(priors[p]), gt[0].box) >= 0.5;
      EXPECT_EQ(m.labels[p], expect ? 3 : 0);
    }
  }
}

TEST(Matching, NoGroundTruthGivesAllBackground) {
  const Fixture f;
  const MatchResult m = match_priors(f.priors, {});
  EXPECT_EQ(m.num_positive(), 0u);
}

TEST(MultiboxLoss, UniformLogitsGiveLogClassCount) {
  const Fixture f;
  RawPrediction raw(4, 3);
  for (std::size_t p = 0; p < 4; ++p)
    for (std::size_t k = 0; k < 4; ++k) raw.offsets[p * 4 + k] = f.raw.offsets[p * 4 + k];
  const MatchResult m = match_priors(f.priors, f.gt);
  const LossTerms t = multibox_loss(raw, m);
  // One positive and three negatives, each contributing ln 3.
  EXPECT_NEAR(t.conf, 4 * std::log(3.0), 1e-12);
}

TEST(MultiboxLoss, FixtureMatchesScalarReference) {
  const Fixture f;
  const LossTerms t = multibox_loss(f.raw, match_priors(f.priors, f.gt));
  EXPECT_NEAR(t.loc, Fixture::kLoc, 1e-12);
  EXPECT_NEAR(t.conf, Fixture::kConf, 1e-12);
  EXPECT_NEAR(t.total, Fixture::kTotal, 1e-12);
}

TEST(MultiboxLoss, HardNegativeCountFollowsRatio) {
  const Fixture f;
  const MatchResult m = match_priors(f.priors, f.gt);
  LossOptions one;
  one.neg_pos_ratio = 1.0;
  const LossTerms t = multibox_loss(f.raw, m, one);
  // Hardest negative by background cross-entropy is prior 3.
  const auto ce = [&](std::size_t p, std::size_t j) {
    double z = 0;
    for (std::size_t k = 0; k < 3; ++k) z += std::exp(f.raw.logit(p, k));
    return std::log(z) - f.raw.logit(p, j);
  };
  EXPECT_NEAR(t.conf, ce(0, 2) + ce(3, 0), 1e-12);
}

TEST(MultiboxLoss, LabelOutsidePredictionRejected) {
  const Fixture f;
  MatchResult m = match_priors(f.priors, f.gt);
  m.labels[0] = 3;
  EXPECT_THROW(multibox_loss(f.raw, m), InvalidDimension);
}

TEST(MultiboxLoss, ZeroPositivesStaysFinite) {
  const Fixture f;
  const LossTerms t = multibox_loss(f.raw, match_priors(f.priors, {}));
  EXPECT_TRUE(std::isfinite(t.total));
  EXPECT_EQ(t.loc, 0.0);
  EXPECT_GT(t.conf, 0.0);
}

TEST(MultiboxLoss, GradientMatchesCentralDifferences) {
  const Fixture f;
  const MatchResult m = match_priors(f.priors, f.gt);
  const auto unpack = [&](std::span<const double> v) {
    RawPrediction r(4, 3);
    std::copy(v.begin(), v.begin() + 12, r.logits.begin());
    std::copy(v.begin() + 12, v.end(), r.offsets.begin());
    return r;
  };
  std::vector<double> params(f.raw.logits);
  params.insert(params.end(), f.raw.offsets.begin(), f.raw.offsets.end());
  const auto loss = [&](std::span<const double> v) { return multibox_loss(unpack(v), m).total; };
  const auto gradient = [&](std::span<const double> v) {
    const RawPrediction r = unpack(v);
    std::vector<RawPrediction> g;
    multibox_loss(std::span<const RawPrediction>(&r, 1), std::span<const MatchResult>(&m, 1), {}, &g);
    std::vector<double> out(g[0].logits);
    out.insert(out.end(), g[0].offsets.begin(), g[0].offsets.end());
    return out;
  };
  const GradCheckReport rep = grad_check(loss, gradient, params, 1e-4);
  EXPECT_EQ(rep.checked, 28u);
  EXPECT_LT(rep.max_rel_error, 1e-3) << "worst index " << rep.worst_index;
}

TEST(Schedule, PiecewiseConstantBoundaries) {
  TrainConfig cfg;
  cfg.schedule = {{3, 0.1}, {2, 0.01}, {1, 0.001}};
  EXPECT_EQ(cfg.total_iterations(), 6u);
  EXPECT_EQ(cfg.lr_at(0), 0.1);
  EXPECT_EQ(cfg.lr_at(2), 0.1);
  EXPECT_EQ(cfg.lr_at(3), 0.01);
  EXPECT_EQ(cfg.lr_at(4), 0.01);
  EXPECT_EQ(cfg.lr_at(5), 0.001);
  EXPECT_EQ(cfg.lr_at(100), 0.001);
}

TEST(Schedule, DefaultIsThreePhaseDecay) {
  const TrainConfig cfg;
  EXPECT_EQ(cfg.total_iterations(), 5000u);
  EXPECT_EQ(cfg.lr_at(2999), cfg.schedule[0].lr);
  EXPECT_EQ(cfg.lr_at(3000), cfg.schedule[0].lr / 10);
  EXPECT_EQ(cfg.lr_at(4000), cfg.schedule[0].lr / 100);
}

TEST(Schedule, InvalidConfigsRejected) {
  TrainConfig cfg;
  cfg.schedule = {};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.momentum = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Sgd, MomentumAndWeightDecayUpdate) {
  std::vector<float> w{1.0f, -2.0f};
  std::vector<ParamRef> params{{"w", &w}};
  SgdMomentum opt(0.9, 0.1);
  opt.step(params, {{0.5f, 0.5f}}, 0.1);
  // v = g + wd*w = (0.6, 0.3); w -= 0.1 v
  EXPECT_FLOAT_EQ(w[0], 0.94f);
  EXPECT_FLOAT_EQ(w[1], -2.03f);
  opt.step(params, {{0.0f, 0.0f}}, 0.1);
  // v = 0.9 v + wd*w
  EXPECT_FLOAT_EQ(w[0], 0.94f - 0.1f * (0.9f * 0.6f + 0.1f * 0.94f));
}

SynthSpec tiny_data(std::uint64_t seed, std::size_t n) {
  SynthSpec s;
  s.num_images = n;
  s.seed = seed;
  return s;
}

TEST(Train, ZeroIterationsKeepsInitialization) {
  const Dataset ds = generate_dataset(tiny_data(1, 4));
  Model model(DetectorConfig{}, 3);
  const Model reference(DetectorConfig{}, 3);
  TrainConfig cfg;
  cfg.schedule = {{0, 1e-2}};
  const TrainResult r = train(model, ds, std::nullopt, cfg, 3);
  EXPECT_TRUE(r.log.empty());
  EXPECT_EQ(r.checkpoint, make_checkpoint(reference, 3, cfg.seed, 0, ""));
}

TEST(Train, KeyRequiredForEncryptedSites) {
  const Dataset ds = generate_dataset(tiny_data(1, 4));
  DetectorConfig dc;
  dc.encrypted_sites = {2};
  Model model(dc, 1);
  TrainConfig cfg;
  cfg.schedule = {{1, 1e-2}};
  EXPECT_THROW(train(model, ds, std::nullopt, cfg, 1), ConfigError);
}

TEST(Train, RecordsKeyFingerprintOnly) {
  const Dataset ds = generate_dataset(tiny_data(1, 4));
  DetectorConfig dc;
  dc.encrypted_sites = {2};
  Model model(dc, 1);
  TrainConfig cfg;
  cfg.schedule = {{2, 1e-2}};
  cfg.batch_size = 2;
  const SecretKey key = testing::counting_key();
  const TrainResult r = train(model, ds, key, cfg, 1);
  EXPECT_EQ(r.checkpoint.key_fingerprint, key.fingerprint());
  EXPECT_EQ(r.log.size(), 2u);
  EXPECT_EQ(r.log[1].iteration, 2u);
}

TEST(Train, DeterministicForFixedSeeds) {
  const Dataset ds = generate_dataset(tiny_data(2, 16));
  TrainConfig cfg;
  cfg.schedule = {{4, 1e-2}};
  cfg.batch_size = 4;
  Model a(DetectorConfig{}, 7), b(DetectorConfig{}, 7);
  const auto ra = train(a, ds, std::nullopt, cfg, 7);
  const auto rb = train(b, ds, std::nullopt, cfg, 7);
  EXPECT_EQ(ra.checkpoint, rb.checkpoint);
  EXPECT_EQ(format_train_log(ra.log), format_train_log(rb.log));
}

TEST(Train, LossDecreasesOverFiftyIterations) {
  const Dataset ds = generate_dataset(tiny_data(5, 64));
  int decreased = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    TrainConfig cfg;
    cfg.schedule = {{50, 1e-2}};
    cfg.seed = seed;
    Model model(DetectorConfig{}, seed);
    const TrainResult r = train(model, ds, std::nullopt, cfg, seed);
    decreased += r.log.back().loss.total < r.log.front().loss.total;
  }
  EXPECT_GE(decreased, 9);
}

TEST(Train, LogCsvFormat) {
  std::vector<TrainLogRow> rows{{1, 0.01, {3.5, 1.25, 2.25}}};
  EXPECT_EQ(format_train_log(rows), "iteration,lr,total,loc,conf\n1,0.01,3.500000,1.250000,2.250000\n");
}

}  // namespace
}  // namespace featlock
