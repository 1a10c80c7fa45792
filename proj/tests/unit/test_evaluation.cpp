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

#include "ap_fuzz.hpp"
#include "ap_oracle.hpp"
#include "featlock/errors.hpp"
#include "featlock/evaluation.hpp"
#include "featlock/rng.hpp"

namespace featlock {
namespace {

using testing::ApInstance;
using testing::fuzz_ap_instance;

TEST(AveragePrecision, PerfectDetectorScoresOne) {
  std::vector<std::vector<GroundTruth>> gt{{{{0.1, 0.1, 0.4, 0.4}}, {{0.5, 0.5, 0.9, 0.9}}}, {{{0.2, 0.3, 0.6, 0.7}}}};
  std::vector<ScoredDetection> dets{{0, 0.9, {0.1, 0.1, 0.4, 0.4}}, {0, 0.8, {0.5, 0.5, 0.9, 0.9}},
                                    {1, 0.7, {0.2, 0.3, 0.6, 0.7}}};
  EXPECT_DOUBLE_EQ(average_precision(dets, gt), 1.0);
  EXPECT_DOUBLE_EQ(average_precision(dets, gt, 0.5, ApProtocol::kAllPoint), 1.0);
}

TEST(AveragePrecision, NoDetectionsScoresZero) {
  std::vector<std::vector<GroundTruth>> gt{{{{0.1, 0.1, 0.4, 0.4}}}};
  EXPECT_DOUBLE_EQ(average_precision({}, gt), 0.0);
}

TEST(AveragePrecision, NoGroundTruthFlagged) {
  std::vector<std::vector<GroundTruth>> gt{{}};
  std::vector<ScoredDetection> dets{{0, 0.9, {0.1, 0.1, 0.4, 0.4}}};
  const ApResult r = average_precision_detail(dets, gt);
  EXPECT_TRUE(r.no_ground_truth);
  EXPECT_DOUBLE_EQ(r.ap, 0.0);
}

TEST(AveragePrecision, DuplicateDetectionIsFalsePositive) {
  std::vector<std::vector<GroundTruth>> gt{{{{0.1, 0.1, 0.4, 0.4}}, {{0.6, 0.6, 0.9, 0.9}}}};
  std::vector<ScoredDetection> dets{{0, 0.9, {0.1, 0.1, 0.4, 0.4}}, {0, 0.8, {0.1, 0.1, 0.4, 0.4}}};
  // Recall tops out at 0.5 with precision 1: six of eleven recall points.
  EXPECT_NEAR(average_precision(dets, gt), 6.0 / 11.0, 1e-12);
}

TEST(AveragePrecision, DifficultMatchesAreIgnored) {
  std::vector<std::vector<GroundTruth>> gt{{{{0.1, 0.1, 0.4, 0.4}, true}, {{0.6, 0.6, 0.9, 0.9}}}};
  std::vector<ScoredDetection> dets{{0, 0.95, {0.1, 0.1, 0.4, 0.4}}, {0, 0.9, {0.6, 0.6, 0.9, 0.9}}};
  EXPECT_DOUBLE_EQ(average_precision(dets, gt), 1.0);
}

TEST(AveragePrecision, MatchesBruteForceOracle) {
  Rng rng(2024);
  for (int t = 0; t < 500; ++t) {
    const ApInstance inst = fuzz_ap_instance(rng);
    for (auto protocol : {ApProtocol::kVoc07ElevenPoint, ApProtocol::kAllPoint}) {
      const double fast = average_precision(inst.dets, inst.gt, 0.5, protocol);
      const double slow = oracle::brute_force_ap(inst.dets, inst.gt, 0.5, protocol);
      ASSERT_NEAR(fast, slow, 1e-9) << "instance " << t;
      ASSERT_GE(fast, 0.0);
      ASSERT_LE(fast, 1.0);
    }
  }
}

TEST(AveragePrecision, AppendingFalsePositiveAtBottomNeverHelps) {
  Rng rng(99);
  for (int t = 0; t < 200; ++t) {
    ApInstance inst = fuzz_ap_instance(rng);
    const double before = average_precision(inst.dets, inst.gt);
    inst.dets.push_back({0, 0.0, {0.95, 0.95, 0.99, 0.99}});
    EXPECT_LE(average_precision(inst.dets, inst.gt), before + 1e-12);
  }
}

TEST(AveragePrecision, ElevenPointKnownCurve) {
  // precision/recall pairs: (1, .25) (.5, .25) (.667, .5) (.5, .5)
  const std::vector<double> p{1.0, 0.5, 2.0 / 3.0, 0.5};
  const std::vector<double> r{0.25, 0.25, 0.5, 0.5};
  // recall >= 0, .1, .2 -> 1; .3 .. .5 -> 2/3; above .5 -> 0
  EXPECT_NEAR(interpolated_ap(p, r, ApProtocol::kVoc07ElevenPoint), (3 * 1.0 + 3 * 2.0 / 3.0) / 11.0, 1e-12);
  EXPECT_NEAR(interpolated_ap(p, r, ApProtocol::kAllPoint), 0.25 * 1.0 + 0.25 * 2.0 / 3.0, 1e-12);
}

TEST(ScoreDetections, EmptyDatasetRejected) {
  Dataset ds;
  ds.class_names = {"a"};
  EXPECT_THROW(score_detections({}, ds, Protocol::kCorrect), ProtocolError);
}

TEST(ScoreDetections, PerClassReportAndCsv) {
  Dataset ds;
  ds.class_names = {"circle", "square"};
  Sample s;
  s.id = "x";
  s.image = Image(3, 8, 8);
  s.objects = {{{0.1, 0.1, 0.5, 0.5}, 0, false}};
  ds.samples.push_back(s);
  std::vector<std::vector<Detection>> dets{{{0, 0.9, {0.1, 0.1, 0.5, 0.5}}}};
  const EvalReport r = score_detections(dets, ds, Protocol::kCorrect);
  ASSERT_EQ(r.per_class_ap.size(), 2u);
  EXPECT_DOUBLE_EQ(r.per_class_ap[0], 1.0);
  EXPECT_DOUBLE_EQ(r.per_class_ap[1], 0.0);
  EXPECT_TRUE(r.class_without_gt[1]);
  EXPECT_DOUBLE_EQ(r.map_value, 0.5);
  EXPECT_EQ(format_eval_report(r),
            "protocol,class,ap\ncorrect,circle,1.000000\ncorrect,square,0.000000\ncorrect,mAP,0.500000\n");
}

TEST(Protocols, NamesRoundTrip) {
  for (auto p : {Protocol::kBaseline, Protocol::kCorrect, Protocol::kPlain, Protocol::kIncorrect})
    EXPECT_EQ(protocol_from_name(protocol_name(p)), p);
  EXPECT_THROW(protocol_from_name("sideways"), ConfigError);
}

}  // namespace
}  // namespace featlock
