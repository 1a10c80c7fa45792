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

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "featlock/checkpoint.hpp"
#include "featlock/data.hpp"
#include "featlock/detector.hpp"

namespace featlock {

struct MatchResult {
  // Per prior: target label (0 = background, k + 1 for object class k),
  // matched ground-truth index or -1, and encoded offsets (zero for background).
  std::vector<int> labels;
  std::vector<int> matched_gt;
  std::vector<std::array<double, 4>> targets;

  std::size_t num_priors() const noexcept { return labels.size(); }
  std::size_t num_positive() const noexcept;
  bool positive(std::size_t p) const { return labels[p] > 0; }
};

// Every ground truth claims its best prior; remaining priors are positive when
// their best IoU with any ground truth reaches `iou_threshold`.
MatchResult match_priors(const std::vector<PriorBox>& priors, const std::vector<Object>& gt,
                         double iou_threshold = 0.5);

double smooth_l1(double u) noexcept;
double smooth_l1_grad(double u) noexcept;

struct LossOptions {
  double loc_weight = 1.0;
  double neg_pos_ratio = 3.0;
};

struct LossTerms {
  double total = 0;
  double loc = 0;
  double conf = 0;
};

// Batch multibox loss: conf + loc_weight * loc, both normalized by the number of
// positives (at least 1). Hard negatives per image: the neg_pos_ratio * max(pos, 1)
// background priors with the largest background cross-entropy. When `grad` is
// given it receives d(total)/d(raw), one entry per image.
LossTerms multibox_loss(std::span<const RawPrediction> raw, std::span<const MatchResult> match,
                        const LossOptions& opts = {}, std::vector<RawPrediction>* grad = nullptr);
LossTerms multibox_loss(const RawPrediction& raw, const MatchResult& match, const LossOptions& opts = {});

struct LrPhase {
  std::size_t iterations = 0;
  double lr = 1e-3;

  friend bool operator==(const LrPhase&, const LrPhase&) = default;
};

struct TrainConfig {
  std::vector<LrPhase> schedule = {{3000, 1e-2}, {1000, 1e-3}, {1000, 1e-4}};
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::size_t batch_size = 32;
  double loc_weight = 1.0;
  double neg_pos_ratio = 3.0;
  double match_iou = 0.5;
  bool augment = true;
  std::uint64_t seed = 1;

  void validate() const;
  std::size_t total_iterations() const noexcept;
  // Learning rate for 0-based iteration t (the last phase extends past the end).
  double lr_at(std::size_t t) const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TrainLogRow {
  std::size_t iteration = 0;  // 1-based
  double lr = 0;
  LossTerms loss;
};

std::string format_train_log(const std::vector<TrainLogRow>& rows);

// SGD with momentum and L2 weight decay: v = m v + (g + wd w); w -= lr v.
class SgdMomentum {
 public:
  SgdMomentum(double momentum, double weight_decay) : momentum_(momentum), weight_decay_(weight_decay) {}
  void step(std::vector<ParamRef>& params, const Gradients& grads, double lr);

 private:
  double momentum_;
  double weight_decay_;
  std::vector<std::vector<float>> velocity_;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<TrainLogRow> log;
};

using TrainProgress = std::function<void(const TrainLogRow&)>;

// The keyed site transform (and input block shuffling, if configured) is applied
// on every training forward pass. Throws DivergenceError on a non-finite loss.
TrainResult train(Model& model, const Dataset& dataset, const std::optional<SecretKey>& key, const TrainConfig& cfg,
                  std::uint64_t model_seed, const TrainProgress& progress = {});

// One training-mode forward pass plus loss on a fixed batch; exposed so tests can
// compare it with Model::forward on the same inputs.
LossTerms batch_loss(const Model& model, const std::vector<const Sample*>& batch, const std::optional<SecretKey>& key,
                     const TrainConfig& cfg, Gradients* grads, std::vector<RawPrediction>* raw_out = nullptr);

struct GradCheckReport {
  double max_rel_error = 0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

// Central finite differences against an analytic gradient. Relative error is
// |a - n| / max(|a|, |n|, abs_floor).
GradCheckReport grad_check(const std::function<double(std::span<const double>)>& loss,
                           const std::function<std::vector<double>(std::span<const double>)>& gradient,
                           std::vector<double> params, double eps = 1e-4, double abs_floor = 1e-6);

}  // namespace featlock
