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
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "featlock/geometry.hpp"
#include "featlock/keyed_transforms.hpp"
#include "featlock/layers.hpp"
#include "featlock/tensor.hpp"

namespace featlock {

struct StageSpec {
  std::size_t channels = 16;
  std::size_t stride = 2;

  friend bool operator==(const StageSpec&, const StageSpec&) = default;
};

// Toy multi-scale single-shot detector: one 3x3 conv + ReLU per stage, 3x3 conv
// heads on `head_levels`. Stage and site indices are 1-based.
struct DetectorConfig {
  std::size_t input_size = 96;
  std::size_t num_classes = 3;  // background is added internally
  std::vector<StageSpec> pyramid = {{16, 2}, {32, 2}, {64, 2}, {64, 2}, {64, 2}, {64, 2}};
  std::vector<int> head_levels = {4, 5, 6};
  std::vector<int> encrypted_sites;
  std::size_t priors_per_cell = 2;
  // Per-head-level prior scales; empty means linear from min_scale to max_scale.
  std::vector<double> prior_scales;
  double min_scale = 0.2;
  double max_scale = 0.8;
  // Block-wise pixel shuffling applied to input images (0 disables).
  std::size_t input_block_size = 0;

  void validate() const;
  std::size_t num_labels() const noexcept { return num_classes + 1; }
  std::size_t num_stages() const noexcept { return pyramid.size(); }
  // Spatial side of every stage output, in stage order.
  std::vector<std::size_t> stage_sizes() const;
  std::vector<double> level_scales() const;

  friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

// Per-prior class logits (num_labels, label 0 = background) and box offsets.
struct RawPrediction {
  std::size_t num_priors = 0;
  std::size_t num_labels = 0;
  std::vector<double> logits;   // num_priors * num_labels
  std::vector<double> offsets;  // num_priors * 4

  RawPrediction() = default;
  RawPrediction(std::size_t priors, std::size_t labels)
      : num_priors(priors), num_labels(labels), logits(priors * labels, 0.0), offsets(priors * 4, 0.0) {}

  double logit(std::size_t prior, std::size_t label) const { return logits[prior * num_labels + label]; }
  std::array<double, 4> offset(std::size_t prior) const {
    return {offsets[prior * 4], offsets[prior * 4 + 1], offsets[prior * 4 + 2], offsets[prior * 4 + 3]};
  }

  friend bool operator==(const RawPrediction&, const RawPrediction&) = default;
};

struct Detection {
  int label = 0;  // 0-based object class
  double score = 0;
  Box box;
};

// Permutations applied at encrypted sites for one key. Empty = no transform.
struct SiteTransform {
  std::map<int, PermutationVector> permutations;

  bool empty() const noexcept { return permutations.empty(); }
};

SiteTransform make_site_transform(const DetectorConfig& config, const SecretKey& key);
// Feature-map permutation for `site` with `channels` channels under `key`.
PermutationVector site_permutation(const SecretKey& key, int site, std::size_t channels);

std::vector<PriorBox> generate_priors(const DetectorConfig& config);

struct ParamRef {
  std::string name;
  std::vector<float>* values;
};
struct ConstParamRef {
  std::string name;
  const std::vector<float>* values;
};

// Activations recorded around one site during forward (for inspection hooks).
struct SiteCapture {
  Tensor before;  // post-ReLU, pre-permutation
  Tensor after;   // what flows onward
};

struct ForwardCache {
  Tensor input;
  std::vector<std::vector<float>> stage_cols;
  std::vector<std::vector<float>> head_cols;
  std::vector<Tensor> activations;   // post-ReLU, pre-permutation
  std::vector<Tensor> site_outputs;  // post-permutation (aliases activations when untouched)
  std::vector<Tensor> head_outputs;
};

using Gradients = std::vector<std::vector<float>>;

class Model {
 public:
  // Deterministic He-normal initialization from `seed`.
  Model(const DetectorConfig& config, std::uint64_t seed);

  const DetectorConfig& config() const noexcept { return config_; }
  std::size_t num_sites() const noexcept { return stages_.size(); }
  std::size_t num_priors() const noexcept { return num_priors_; }
  std::size_t parameter_count() const;

  std::vector<ParamRef> parameters();
  std::vector<ConstParamRef> parameters() const;
  Gradients zero_gradients() const;

  // Images must be (N, 3, input_size, input_size). Input block shuffling is the
  // caller's responsibility; see prepare_input().
  std::vector<RawPrediction> forward(const Tensor& images, const SiteTransform& transform,
                                     std::map<int, SiteCapture>* captures = nullptr) const;
  std::vector<RawPrediction> forward(const Tensor& images, const std::optional<SecretKey>& key) const;

  // Forward pass that retains what backward() needs.
  std::vector<RawPrediction> forward_train(const Tensor& images, const SiteTransform& transform,
                                           ForwardCache& cache) const;
  // Accumulates parameter gradients given d(loss)/d(raw predictions).
  void backward(const ForwardCache& cache, const SiteTransform& transform,
                const std::vector<RawPrediction>& grad_raw, Gradients& grads) const;

 private:
  std::vector<Tensor> run(const Tensor& images, const SiteTransform& transform, ForwardCache* cache,
                          std::map<int, SiteCapture>* captures) const;
  std::vector<RawPrediction> gather(const std::vector<Tensor>& head_outputs) const;

  DetectorConfig config_;
  std::vector<Conv2d> stages_;
  std::vector<Conv2d> heads_;
  std::vector<std::size_t> level_offsets_;  // first prior index per head level
  std::size_t num_priors_ = 0;
};

// Stack images into an NCHW batch.
Tensor make_batch(const std::vector<const Image*>& images);

// Model-input view of an image: block-shuffled with `key` when the config uses
// input encryption and a key is supplied, otherwise unchanged.
Image transform_input(const Image& img, const DetectorConfig& config, const std::optional<SecretKey>& key);

struct NmsOptions {
  double score_threshold = 0.05;
  double nms_iou = 0.45;
  std::size_t top_k = 100;
};

// Softmax scores, box decode against priors, per-class greedy NMS, top-k by score.
std::vector<Detection> decode_and_nms(const RawPrediction& raw, const std::vector<PriorBox>& priors,
                                      const NmsOptions& opts = {});
// Greedy NMS over already-decoded boxes of a single class; returns kept indices.
std::vector<std::size_t> greedy_nms(const std::vector<Box>& boxes, const std::vector<double>& scores,
                                    double iou_threshold);

}  // namespace featlock
