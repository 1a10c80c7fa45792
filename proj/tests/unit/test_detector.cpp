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
#include <fstream>

#include "featlock/data.hpp"
#include "featlock/detector.hpp"
#include "featlock/errors.hpp"
#include "featlock/training.hpp"
#include "test_support.hpp"

namespace featlock {
namespace {

using testing::counting_key;
using testing::data_path;

DetectorConfig tiny_config(std::vector<int> sites = {}) {
  DetectorConfig c;
  c.input_size = 16;
  c.num_classes = 2;
  c.pyramid = {{4, 2}, {6, 2}, {8, 2}};
  c.head_levels = {2, 3};
  c.encrypted_sites = std::move(sites);
  return c;
}

Tensor random_batch(std::size_t n, std::size_t size, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t(n, 3, size, size);
  for (auto& v : t.data) v = static_cast<float>(rng.uniform());
  return t;
}

TEST(DetectorConfig, DefaultGeometry) {
  const DetectorConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.stage_sizes(), (std::vector<std::size_t>{48, 24, 12, 6, 3, 2}));
  const auto s = c.level_scales();
  ASSERT_EQ(s.size(), 3u);
  EXPECT_DOUBLE_EQ(s[0], 0.2);
  EXPECT_DOUBLE_EQ(s[1], 0.5);
  EXPECT_DOUBLE_EQ(s[2], 0.8);
}

TEST(DetectorConfig, InvalidConfigsRejected) {
  DetectorConfig c;
  c.encrypted_sites = {7};
  EXPECT_THROW(c.validate(), ConfigError);
  c = DetectorConfig{};
  c.head_levels = {};
  EXPECT_THROW(c.validate(), ConfigError);
  c = DetectorConfig{};
  c.pyramid[2].channels = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = DetectorConfig{};
  c.input_block_size = 20;
  EXPECT_THROW(c.validate(), InvalidDimension);
}

TEST(Priors, SingleCellGrid) {
  DetectorConfig c;
  c.input_size = 2;
  c.pyramid = {{4, 2}};
  c.head_levels = {1};
  c.priors_per_cell = 1;
  c.prior_scales = {0.5};
  const auto p = generate_priors(c);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0], (PriorBox{0.5, 0.5, 0.5, 0.5}));
}

TEST(Priors, DefaultMatchesReferenceTiling) {
  const auto priors = generate_priors(DetectorConfig{});
  ASSERT_EQ(priors.size(), 98u);
  std::ifstream in(data_path("golden_priors_default.txt"));
  for (const auto& p : priors) {
    double cx, cy, w, h;
    ASSERT_TRUE(in >> cx >> cy >> w >> h);
    EXPECT_NEAR(p.cx, cx, 1e-12);
    EXPECT_NEAR(p.cy, cy, 1e-12);
    EXPECT_NEAR(p.w, w, 1e-12);
    EXPECT_NEAR(p.h, h, 1e-12);
  }
}

TEST(Priors, CountMatchesModel) {
  const DetectorConfig c = tiny_config();
  const Model m(c, 1);
  EXPECT_EQ(m.num_priors(), generate_priors(c).size());
  EXPECT_EQ(m.num_priors(), (4u * 4u + 2u * 2u) * 2u);
}

TEST(Model, DefaultParameterCount) {
  // 3x3 conv stages 3-16-32-64-64-64-64, heads 64 -> 2*(4+4) on stages 4..6.
  const std::size_t stages = (27 * 16 + 16) + (144 * 32 + 32) + (288 * 64 + 64) + 3 * (576 * 64 + 64);
  const std::size_t heads = 3 * (576 * 16 + 16);
  EXPECT_EQ(stages + heads, 162064u);
  EXPECT_EQ(Model(DetectorConfig{}, 1).parameter_count(), 162064u);
}

TEST(Model, InitializationDeterministicPerSeed) {
  const Model a(tiny_config(), 5), b(tiny_config(), 5), c(tiny_config(), 6);
  const auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  ASSERT_EQ(pa.size(), 10u);
  bool any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(*pa[i].values, *pb[i].values);
    any_diff |= *pa[i].values != *pc[i].values;
  }
  EXPECT_TRUE(any_diff);
  EXPECT_EQ(pa[0].name, "stage1.weight");
  EXPECT_EQ(pa.back().name, "head2.bias");
}

TEST(Model, ForwardIsDeterministic) {
  const Model m(tiny_config({1}), 3);
  const Tensor x = random_batch(2, 16, 9);
  EXPECT_EQ(m.forward(x, counting_key()), m.forward(x, counting_key()));
}

TEST(Model, NoSitesIgnoresKey) {
  const Model m(tiny_config(), 3);
  const Tensor x = random_batch(2, 16, 9);
  EXPECT_EQ(m.forward(x, counting_key()), m.forward(x, std::nullopt));
}

TEST(Model, WrongKeyChangesOutput) {
  const Model m(tiny_config({2}), 3);
  const Tensor x = random_batch(1, 16, 9);
  EXPECT_NE(m.forward(x, counting_key()), m.forward(x, SecretKey({9, 9, 9})));
}

TEST(Model, PermutationAppliedOnlyAtEncryptedSite) {
  const DetectorConfig c = tiny_config({2});
  const Model m(c, 4);
  const Tensor x = random_batch(2, 16, 10);
  const SiteTransform t = make_site_transform(c, counting_key());
  std::map<int, SiteCapture> caps;
  m.forward(x, t, &caps);
  ASSERT_EQ(caps.size(), 3u);
  EXPECT_EQ(caps[1].before, caps[1].after);
  EXPECT_EQ(caps[3].before, caps[3].after);
  const PermutationVector& p = t.permutations.at(2);
  EXPECT_EQ(p, site_permutation(counting_key(), 2, 6));
  const Tensor& before = caps[2].before;
  const Tensor& after = caps[2].after;
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t ch = 0; ch < 6; ++ch)
      for (std::size_t k = 0; k < before.plane_size(); ++k)
        ASSERT_EQ(after.sample(n)[ch * after.plane_size() + k], before.sample(n)[p.source(ch) * before.plane_size() + k]);
  // Activations at the site are post-ReLU.
  for (float v : before.data) ASSERT_GE(v, 0.0f);
}

TEST(Model, RejectsMismatchedInput) {
  const Model m(tiny_config(), 1);
  EXPECT_THROW(m.forward(random_batch(1, 20, 1), std::nullopt), InvalidDimension);
  SiteTransform bad;
  bad.permutations.emplace(1, PermutationVector::identity(5));
  EXPECT_THROW(m.forward(random_batch(1, 16, 1), bad), InvalidDimension);
}

TEST(Model, ImageBlockShuffleUsesKeyedInput) {
  DetectorConfig c = tiny_config();
  c.input_block_size = 4;
  Rng rng(2);
  const Image img = testing::random_map(rng, 3, 16, 16);
  EXPECT_EQ(transform_input(img, c, counting_key()), encrypt_image(img, counting_key(), 4));
  EXPECT_EQ(transform_input(img, c, std::nullopt), img);
}

TEST(Model, BackwardMatchesFiniteDifferences) {
  const DetectorConfig c = tiny_config({1, 2});
  Model model(c, 21);
  SynthSpec spec;
  spec.classes = {"circle", "square"};
  spec.num_images = 3;
  spec.image_size = 16;
  spec.min_size = 0.3;
  spec.max_size = 0.6;
  spec.seed = 3;
  const Dataset ds = generate_dataset(spec);
  std::vector<const Sample*> batch;
  for (const auto& s : ds.samples) batch.push_back(&s);
  TrainConfig cfg;
  // Every negative contributes, so hard-negative selection cannot jump under perturbation.
  cfg.neg_pos_ratio = 1e9;
  const SecretKey key = counting_key();

  Gradients grads = model.zero_gradients();
  batch_loss(model, batch, key, cfg, &grads);

  Rng pick(8);
  auto params = model.parameters();
  int checked = 0, bad = 0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& w = *params[t].values;
    for (int k = 0; k < 12; ++k) {
      const auto i = static_cast<std::size_t>(pick.uniform_int(0, static_cast<std::int64_t>(w.size()) - 1));
      const float saved = w[i];
      const float eps = 1e-3f;
      w[i] = saved + eps;
      const double up = batch_loss(model, batch, key, cfg, nullptr).total;
      w[i] = saved - eps;
      const double down = batch_loss(model, batch, key, cfg, nullptr).total;
      w[i] = saved;
      const double fd = (up - down) / (2.0 * static_cast<double>(eps));
      const double an = grads[t][i];
      ++checked;
      if (std::abs(fd - an) > 2e-2 * std::max(std::abs(fd), std::abs(an)) + 1e-2) {
        ++bad;
        ADD_FAILURE() << params[t].name << "[" << i << "] fd=" << fd << " analytic=" << an;
      }
    }
  }
  EXPECT_EQ(checked, 120);
  EXPECT_EQ(bad, 0);
}

TEST(Decode, ZeroOffsetsReproducePriors) {
  const auto priors = generate_priors(tiny_config());
  RawPrediction raw(priors.size(), 3);
  for (std::size_t p = 0; p < priors.size(); ++p) {
    raw.logits[p * 3 + 1] = p == 5 ? 8.0 : -8.0;
    raw.logits[p * 3 + 2] = -8.0;
  }
  NmsOptions opts;
  const auto dets = decode_and_nms(raw, priors, opts);
  ASSERT_EQ(dets.size(), 1u);
  const Box expect = to_corner(priors[5]);
  EXPECT_EQ(dets[0].label, 0);
  EXPECT_NEAR(dets[0].box.xmin, std::clamp(expect.xmin, 0.0, 1.0), 1e-12);
  EXPECT_NEAR(dets[0].box.ymax, std::clamp(expect.ymax, 0.0, 1.0), 1e-12);
}

TEST(Nms, HighOverlapKeepsOnlyTopScore) {
  const std::vector<Box> boxes{{0, 0, 1, 1}, {0, 0, 1, 0.8}, {0.5, 0.5, 0.9, 0.9}};
  EXPECT_NEAR(iou(boxes[0], boxes[1]), 0.8, 1e-12);
  EXPECT_EQ(greedy_nms(boxes, {0.6, 0.9, 0.5}, 0.45), (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(greedy_nms(boxes, {0.6, 0.9, 0.5}, 0.85), (std::vector<std::size_t>{1, 0, 2}));
}

TEST(Nms, ScoreThresholdAndTopK) {
  const auto priors = generate_priors(tiny_config());
  RawPrediction raw(priors.size(), 3);
  for (std::size_t p = 0; p < priors.size(); ++p) raw.logits[p * 3 + 2] = 4.0;
  NmsOptions opts;
  opts.nms_iou = 1.0;
  opts.top_k = 7;
  EXPECT_EQ(decode_and_nms(raw, priors, opts).size(), 7u);
  opts.score_threshold = 0.99;
  EXPECT_TRUE(decode_and_nms(raw, priors, opts).empty());
}

}  // namespace
}  // namespace featlock
