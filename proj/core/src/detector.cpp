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

#include "featlock/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "featlock/errors.hpp"

namespace featlock {

void DetectorConfig::validate() const {
  if (input_size == 0) throw ConfigError("detector input_size must be positive");
  if (num_classes == 0) throw ConfigError("detector needs at least one object class");
  if (pyramid.empty()) throw ConfigError("detector pyramid is empty");
  for (const auto& s : pyramid) {
    if (s.channels == 0 || s.stride == 0) throw ConfigError("pyramid widths and strides must be >= 1");
  }
  if (head_levels.empty()) throw ConfigError("detector needs at least one head level");
  const int L = static_cast<int>(pyramid.size());
  for (int h : head_levels) {
    if (h < 1 || h > L) throw ConfigError("head level " + std::to_string(h) + " outside 1.." + std::to_string(L));
  }
  for (int s : encrypted_sites) {
    if (s < 1 || s > L) throw ConfigError("encrypted site " + std::to_string(s) + " outside 1.." + std::to_string(L));
  }
  if (priors_per_cell == 0) throw ConfigError("priors_per_cell must be >= 1");
  if (!prior_scales.empty() && prior_scales.size() != head_levels.size()) {
    throw ConfigError("prior_scales must list one scale per head level");
  }
  for (double s : level_scales()) {
    if (!(s > 0)) throw ConfigError("prior scales must be positive");
  }
  if (input_block_size != 0 && input_size % input_block_size != 0) {
    throw InvalidDimension("input block size " + std::to_string(input_block_size) + " does not divide input size " +
                           std::to_string(input_size));
  }
  const auto sizes = stage_sizes();
  if (sizes.back() == 0) throw ConfigError("pyramid downsamples the input to nothing");
}

std::vector<std::size_t> DetectorConfig::stage_sizes() const {
  std::vector<std::size_t> sizes;
  std::size_t s = input_size;
  for (const auto& st : pyramid) {
    s = s == 0 ? 0 : (s + 2 - 3) / st.stride + 1;
    sizes.push_back(s);
  }
  return sizes;
}

std::vector<double> DetectorConfig::level_scales() const {
  if (!prior_scales.empty()) return prior_scales;
  const std::size_t n = head_levels.size();
  std::vector<double> scales(n, min_scale);
  for (std::size_t i = 1; i < n; ++i) {
    scales[i] = min_scale + (max_scale - min_scale) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return scales;
}

PermutationVector site_permutation(const SecretKey& key, int site, std::size_t channels) {
  return derive_permutation(key, channels, static_cast<std::uint32_t>(site));
}

SiteTransform make_site_transform(const DetectorConfig& config, const SecretKey& key) {
  SiteTransform t;
  for (int s : config.encrypted_sites) {
    t.permutations.emplace(s, site_permutation(key, s, config.pyramid[static_cast<std::size_t>(s - 1)].channels));
  }
  return t;
}

std::vector<PriorBox> generate_priors(const DetectorConfig& config) {
  const auto sizes = config.stage_sizes();
  const auto scales = config.level_scales();
  std::vector<PriorBox> priors;
  for (std::size_t l = 0; l < config.head_levels.size(); ++l) {
    const std::size_t g = sizes[static_cast<std::size_t>(config.head_levels[l] - 1)];
    for (std::size_t y = 0; y < g; ++y)
      for (std::size_t x = 0; x < g; ++x)
        for (std::size_t a = 0; a < config.priors_per_cell; ++a) {
          // Successive priors in a cell grow by sqrt(2).
          const double s = scales[l] * std::pow(std::sqrt(2.0), static_cast<double>(a));
          priors.push_back({(x + 0.5) / static_cast<double>(g), (y + 0.5) / static_cast<double>(g), s, s});
        }
  }
  return priors;
}

Model::Model(const DetectorConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);
  std::size_t in_c = 3;
  for (const auto& st : config_.pyramid) {
    stages_.emplace_back(in_c, st.channels, 3, st.stride, 1);
    stages_.back().init(rng);
    in_c = st.channels;
  }
  const auto sizes = config_.stage_sizes();
  const std::size_t per_prior = config_.num_labels() + 4;
  for (int h : config_.head_levels) {
    const auto idx = static_cast<std::size_t>(h - 1);
    heads_.emplace_back(config_.pyramid[idx].channels, config_.priors_per_cell * per_prior, 3, 1, 1);
    heads_.back().init(rng);
    level_offsets_.push_back(num_priors_);
    num_priors_ += sizes[idx] * sizes[idx] * config_.priors_per_cell;
  }
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.values->size();
  return n;
}

std::vector<ParamRef> Model::parameters() {
  std::vector<ParamRef> out;
  for (std::size_t i = 0; i < stages_.size(); ++i) {
    out.push_back({"stage" + std::to_string(i + 1) + ".weight", &stages_[i].weight()});
    out.push_back({"stage" + std::to_string(i + 1) + ".bias", &stages_[i].bias()});
  }
  for (std::size_t i = 0; i < heads_.size(); ++i) {
    out.push_back({"head" + std::to_string(i + 1) + ".weight", &heads_[i].weight()});
    out.push_back({"head" + std::to_string(i + 1) + ".bias", &heads_[i].bias()});
  }
  return out;
}

std::vector<ConstParamRef> Model::parameters() const {
  std::vector<ConstParamRef> out;
  for (auto& p : const_cast<Model*>(this)->parameters()) out.push_back({p.name, p.values});
  return out;
}

Gradients Model::zero_gradients() const {
  Gradients g;
  for (const auto& p : parameters()) g.emplace_back(p.values->size(), 0.0f);
  return g;
}

std::vector<Tensor> Model::run(const Tensor& images, const SiteTransform& transform, ForwardCache* cache,
                               std::map<int, SiteCapture>* captures) const {
  if (images.c != 3 || images.h != config_.input_size || images.w != config_.input_size) {
    throw InvalidDimension("model expects (N, 3, " + std::to_string(config_.input_size) + ", " +
                           std::to_string(config_.input_size) + ") input, got (" + std::to_string(images.n) + ", " +
                           std::to_string(images.c) + ", " + std::to_string(images.h) + ", " +
                           std::to_string(images.w) + ")");
  }
  for (const auto& [site, perm] : transform.permutations) {
    if (site < 1 || site > static_cast<int>(stages_.size()) ||
        perm.size() != stages_[static_cast<std::size_t>(site - 1)].out_channels()) {
      throw InvalidDimension("site transform does not fit the model at site " + std::to_string(site));
    }
  }
  if (cache) {
    cache->stage_cols.assign(stages_.size(), {});
    cache->head_cols.assign(heads_.size(), {});
    cache->activations.clear();
    cache->site_outputs.clear();
  }

  // Inputs are centered around zero before the first convolution.
  Tensor centered = images;
  for (auto& v : centered.data) v -= 0.5f;

  std::vector<Tensor> site_out(stages_.size());
  const Tensor* x = &centered;
  for (std::size_t i = 0; i < stages_.size(); ++i) {
    Tensor act = stages_[i].forward(*x, cache ? &cache->stage_cols[i] : nullptr);
    relu_inplace(act);
    const int site = static_cast<int>(i + 1);
    const auto it = transform.permutations.find(site);
    if (it != transform.permutations.end()) {
      Tensor permuted(act.n, act.c, act.h, act.w);
      for (std::size_t n = 0; n < act.n; ++n) {
        apply_permutation(std::span<const float>(act.sample(n), act.sample_size()),
                          std::span<float>(permuted.sample(n), act.sample_size()), act.plane_size(), it->second);
      }
      if (captures) (*captures)[site] = {act, permuted};
      if (cache) cache->activations.push_back(std::move(act));
      site_out[i] = std::move(permuted);
    } else {
      if (captures) (*captures)[site] = {act, act};
      if (cache) cache->activations.push_back(act);
      site_out[i] = std::move(act);
    }
    x = &site_out[i];
  }

  std::vector<Tensor> heads;
  for (std::size_t l = 0; l < heads_.size(); ++l) {
    const auto idx = static_cast<std::size_t>(config_.head_levels[l] - 1);
    heads.push_back(heads_[l].forward(site_out[idx], cache ? &cache->head_cols[l] : nullptr));
  }
  if (cache) {
    cache->site_outputs = std::move(site_out);
    cache->head_outputs = heads;
  }
  return heads;
}

std::vector<RawPrediction> Model::gather(const std::vector<Tensor>& head_outputs) const {
  const std::size_t L = config_.num_labels(), A = config_.priors_per_cell, per = L + 4;
  const std::size_t N = head_outputs.empty() ? 0 : head_outputs.front().n;
  std::vector<RawPrediction> out(N, RawPrediction(num_priors_, L));
  for (std::size_t l = 0; l < head_outputs.size(); ++l) {
    const Tensor& h = head_outputs[l];
    const std::size_t plane = h.plane_size();
    for (std::size_t n = 0; n < N; ++n) {
      const float* src = h.sample(n);
      for (std::size_t cell = 0; cell < plane; ++cell)
        for (std::size_t a = 0; a < A; ++a) {
          const std::size_t p = level_offsets_[l] + cell * A + a;
          for (std::size_t j = 0; j < L; ++j) out[n].logits[p * L + j] = src[(a * per + j) * plane + cell];
          for (std::size_t k = 0; k < 4; ++k) out[n].offsets[p * 4 + k] = src[(a * per + L + k) * plane + cell];
        }
    }
  }
  return out;
}

std::vector<RawPrediction> Model::forward(const Tensor& images, const SiteTransform& transform,
                                          std::map<int, SiteCapture>* captures) const {
  return gather(run(images, transform, nullptr, captures));
}

std::vector<RawPrediction> Model::forward(const Tensor& images, const std::optional<SecretKey>& key) const {
  return forward(images, key ? make_site_transform(config_, *key) : SiteTransform{});
}

std::vector<RawPrediction> Model::forward_train(const Tensor& images, const SiteTransform& transform,
                                                ForwardCache& cache) const {
  auto heads = run(images, transform, &cache, nullptr);
  cache.input = Tensor();
  cache.input.n = images.n;
  cache.input.c = images.c;
  cache.input.h = images.h;
  cache.input.w = images.w;
  return gather(heads);
}

void Model::backward(const ForwardCache& cache, const SiteTransform& transform,
                     const std::vector<RawPrediction>& grad_raw, Gradients& grads) const {
  const std::size_t L = config_.num_labels(), A = config_.priors_per_cell, per = L + 4;
  const std::size_t S = stages_.size();
  if (grad_raw.size() != cache.input.n) throw InvalidDimension("backward: gradient batch size mismatch");

  // d(loss)/d(site output), accumulated from heads and the next stage.
  std::vector<Tensor> d_site(S);
  for (std::size_t i = 0; i < S; ++i) {
    const Tensor& a = cache.activations[i];
    d_site[i] = Tensor(a.n, a.c, a.h, a.w);
  }

  for (std::size_t l = 0; l < heads_.size(); ++l) {
    const Tensor& h = cache.head_outputs[l];
    Tensor dh(h.n, h.c, h.h, h.w);
    const std::size_t plane = h.plane_size();
    for (std::size_t n = 0; n < h.n; ++n) {
      float* dst = dh.sample(n);
      for (std::size_t cell = 0; cell < plane; ++cell)
        for (std::size_t a = 0; a < A; ++a) {
          const std::size_t p = level_offsets_[l] + cell * A + a;
          for (std::size_t j = 0; j < L; ++j)
            dst[(a * per + j) * plane + cell] = static_cast<float>(grad_raw[n].logits[p * L + j]);
          for (std::size_t k = 0; k < 4; ++k)
            dst[(a * per + L + k) * plane + cell] = static_cast<float>(grad_raw[n].offsets[p * 4 + k]);
        }
    }
    const auto idx = static_cast<std::size_t>(config_.head_levels[l] - 1);
    const std::size_t g = 2 * (S + l);
    Tensor dx = heads_[l].backward(dh, cache.site_outputs[idx], cache.head_cols[l], grads[g], grads[g + 1], true);
    for (std::size_t k = 0; k < dx.data.size(); ++k) d_site[idx].data[k] += dx.data[k];
  }

  for (std::size_t i = S; i-- > 0;) {
    Tensor d_act = std::move(d_site[i]);
    const auto it = transform.permutations.find(static_cast<int>(i + 1));
    if (it != transform.permutations.end()) {
      // out(c) = in(alpha_c)  =>  d_in(alpha_c) = d_out(c).
      Tensor unpermuted(d_act.n, d_act.c, d_act.h, d_act.w);
      const auto inv = invert_permutation(it->second);
      for (std::size_t n = 0; n < d_act.n; ++n) {
        apply_permutation(std::span<const float>(d_act.sample(n), d_act.sample_size()),
                          std::span<float>(unpermuted.sample(n), d_act.sample_size()), d_act.plane_size(), inv);
      }
      d_act = std::move(unpermuted);
    }
    relu_backward_inplace(d_act, cache.activations[i]);
    const Tensor& input_shape = i == 0 ? cache.input : cache.site_outputs[i - 1];
    Tensor dx = stages_[i].backward(d_act, input_shape, cache.stage_cols[i], grads[2 * i], grads[2 * i + 1], i > 0);
    if (i > 0) {
      for (std::size_t k = 0; k < dx.data.size(); ++k) d_site[i - 1].data[k] += dx.data[k];
    }
  }
}

Tensor make_batch(const std::vector<const Image*>& images) {
  if (images.empty()) return {};
  const Image& first = *images.front();
  Tensor t(images.size(), first.channels(), first.height(), first.width());
  for (std::size_t n = 0; n < images.size(); ++n) {
    const Image& img = *images[n];
    if (img.channels() != t.c || img.height() != t.h || img.width() != t.w) {
      throw InvalidDimension("batch images must share one shape");
    }
    std::copy(img.values().begin(), img.values().end(), t.sample(n));
  }
  return t;
}

Image transform_input(const Image& img, const DetectorConfig& config, const std::optional<SecretKey>& key) {
  if (config.input_block_size == 0 || !key) return img;
  return encrypt_image(img, *key, config.input_block_size);
}

std::vector<std::size_t> greedy_nms(const std::vector<Box>& boxes, const std::vector<double>& scores,
                                    double iou_threshold) {
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<std::size_t> keep;
  for (std::size_t i : order) {
    bool suppressed = false;
    for (std::size_t k : keep) {
      if (iou(boxes[i], boxes[k]) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) keep.push_back(i);
  }
  return keep;
}

std::vector<Detection> decode_and_nms(const RawPrediction& raw, const std::vector<PriorBox>& priors,
                                      const NmsOptions& opts) {
  if (raw.num_priors != priors.size()) throw InvalidDimension("raw predictions and priors are not aligned");
  const std::size_t L = raw.num_labels;
  std::vector<Box> decoded(priors.size());
  std::vector<double> probs(priors.size() * L);
  for (std::size_t p = 0; p < priors.size(); ++p) {
    Box b = decode_box(raw.offset(p), priors[p]);
    b.xmin = std::clamp(b.xmin, 0.0, 1.0);
    b.ymin = std::clamp(b.ymin, 0.0, 1.0);
    b.xmax = std::clamp(b.xmax, 0.0, 1.0);
    b.ymax = std::clamp(b.ymax, 0.0, 1.0);
    decoded[p] = b;
    double mx = raw.logit(p, 0);
    for (std::size_t j = 1; j < L; ++j) mx = std::max(mx, raw.logit(p, j));
    double z = 0;
    for (std::size_t j = 0; j < L; ++j) z += std::exp(raw.logit(p, j) - mx);
    for (std::size_t j = 0; j < L; ++j) probs[p * L + j] = std::exp(raw.logit(p, j) - mx) / z;
  }

  std::vector<Detection> dets;
  for (std::size_t label = 1; label < L; ++label) {
    std::vector<Box> boxes;
    std::vector<double> scores;
    for (std::size_t p = 0; p < priors.size(); ++p) {
      const double s = probs[p * L + label];
      if (s > opts.score_threshold && decoded[p].valid()) {
        boxes.push_back(decoded[p]);
        scores.push_back(s);
      }
    }
    for (std::size_t k : greedy_nms(boxes, scores, opts.nms_iou)) {
      dets.push_back({static_cast<int>(label) - 1, scores[k], boxes[k]});
    }
  }
  std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) { return a.score > b.score; });
  if (dets.size() > opts.top_k) dets.resize(opts.top_k);
  return dets;
}

}  // namespace featlock
