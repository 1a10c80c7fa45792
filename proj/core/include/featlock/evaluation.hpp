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

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "featlock/data.hpp"
#include "featlock/detector.hpp"
#include "featlock/geometry.hpp"
#include "featlock/keyed_transforms.hpp"

namespace featlock {

enum class ApProtocol {
  kVoc07ElevenPoint,  // mean of max precision at recall >= 0, 0.1, ..., 1
  kAllPoint,          // area under the monotone precision envelope
};

struct ScoredDetection {
  std::size_t image = 0;
  double score = 0;
  Box box;
};

struct GroundTruth {
  Box box;
  bool difficult = false;
};

struct ApResult {
  double ap = 0;
  std::size_t num_gt = 0;  // non-difficult ground truths
  bool no_ground_truth = false;
};

// Detections are ranked by descending score, ties broken by image then input
// order. Each detection takes its highest-IoU ground truth in the same image;
// it is a true positive if IoU >= iou_threshold and that ground truth is still
// unclaimed. Detections landing on difficult ground truth are ignored.
ApResult average_precision_detail(const std::vector<ScoredDetection>& detections,
                                  const std::vector<std::vector<GroundTruth>>& ground_truth,
                                  double iou_threshold = 0.5,
                                  ApProtocol protocol = ApProtocol::kVoc07ElevenPoint);
double average_precision(const std::vector<ScoredDetection>& detections,
                         const std::vector<std::vector<GroundTruth>>& ground_truth, double iou_threshold = 0.5,
                         ApProtocol protocol = ApProtocol::kVoc07ElevenPoint);

// Interpolated AP from a precision/recall sequence in rank order.
double interpolated_ap(const std::vector<double>& precision, const std::vector<double>& recall, ApProtocol protocol);

enum class Protocol { kBaseline, kCorrect, kPlain, kIncorrect };

std::string protocol_name(Protocol p);
Protocol protocol_from_name(const std::string& name);

// How the evaluator treats keyed transforms. Plain carries no key at all.
class KeyMode {
 public:
  static KeyMode baseline() { return KeyMode(Protocol::kBaseline, std::nullopt); }
  static KeyMode correct(SecretKey key) { return KeyMode(Protocol::kCorrect, std::move(key)); }
  static KeyMode plain() { return KeyMode(Protocol::kPlain, std::nullopt); }
  static KeyMode incorrect(SecretKey key) { return KeyMode(Protocol::kIncorrect, std::move(key)); }

  Protocol protocol() const noexcept { return protocol_; }
  const std::optional<SecretKey>& key() const noexcept { return key_; }

 private:
  KeyMode(Protocol p, std::optional<SecretKey> k) : protocol_(p), key_(std::move(k)) {}
  Protocol protocol_;
  std::optional<SecretKey> key_;
};

struct EvalOptions {
  NmsOptions nms;
  double iou_threshold = 0.5;
  ApProtocol ap_protocol = ApProtocol::kVoc07ElevenPoint;
  std::size_t batch_size = 50;
};

struct EvalReport {
  Protocol protocol = Protocol::kCorrect;
  std::vector<std::string> class_names;
  std::vector<double> per_class_ap;
  std::vector<bool> class_without_gt;
  double map_value = 0;
  std::size_t num_images = 0;
  std::size_t num_gt = 0;
  std::size_t num_detections = 0;
};

// Per-image detections under the given key mode.
std::vector<std::vector<Detection>> detect(const Model& model, const Dataset& dataset, const KeyMode& mode,
                                           const EvalOptions& opts = {});
EvalReport score_detections(const std::vector<std::vector<Detection>>& detections, const Dataset& dataset,
                            Protocol protocol, const EvalOptions& opts = {});
// Throws ProtocolError when the dataset holds no ground truth.
EvalReport evaluate(const Model& model, const Dataset& dataset, const KeyMode& mode, const EvalOptions& opts = {});

// CSV with header "protocol,class,ap" and a summary row "<protocol>,mAP,<value>".
std::string format_eval_report(const EvalReport& report);
std::string format_eval_reports(const std::vector<EvalReport>& reports);

}  // namespace featlock
