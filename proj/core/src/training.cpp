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

#include "featlock/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "featlock/errors.hpp"
#include "featlock/rng.hpp"

namespace featlock {

std::size_t MatchResult::num_positive() const noexcept {
  return static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](int l) { return l > 0; }));
}

MatchResult match_priors(const std::vector<PriorBox>& priors, const std::vector<Object>& gt, double iou_threshold) {
  if (priors.empty()) throw InvalidDimension("cannot match against an empty prior set");
  const std::size_t P = priors.size(), G = gt.size();
  MatchResult m;
  m.labels.assign(P, 0);
  m.matched_gt.assign(P, -1);
  m.targets.assign(P, {0, 0, 0, 0});
  if (G == 0) return m;

  std::vector<double> overlap(P * G);
  std::vector<Box> prior_boxes(P);
  for (std::size_t p = 0; p < P; ++p) prior_boxes[p] = to_corner(priors[p]);
  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t g = 0; g < G; ++g) overlap[p * G + g] = iou(prior_boxes[p], gt[g].box);

  for (std::size_t p = 0; p < P; ++p) {
    std::size_t best = 0;
    for (std::size_t g = 1; g < G; ++g)
      if (overlap[p * G + g] > overlap[p * G + best]) best = g;
    if (overlap[p * G + best] >= iou_threshold) m.matched_gt[p] = static_cast<int>(best);
  }
  for (std::size_t g = 0; g < G; ++g) {
    std::size_t best = 0;
    for (std::size_t p = 1; p < P; ++p)
      if (overlap[p * G + g] > overlap[best * G + g]) best = p;
    m.matched_gt[best] = static_cast<int>(g);
  }
  for (std::size_t p = 0; p < P; ++p) {
    const int g = m.matched_gt[p];
    if (g < 0) continue;
    m.labels[p] = gt[static_cast<std::size_t>(g)].label + 1;
    m.targets[p] = encode_box(gt[static_cast<std::size_t>(g)].box, priors[p]);
  }
  return m;
}

double smooth_l1(double u) noexcept {
  const double a = std::abs(u);
  return a < 1.0 ? 0.5 * u * u : a - 0.5;
}

double smooth_l1_grad(double u) noexcept {
  if (u >= 1.0) return 1.0;
  if (u <= -1.0) return -1.0;
  return u;
}

LossTerms multibox_loss(std::span<const RawPrediction> raw, std::span<const MatchResult> match, const LossOptions& opts,
                        std::vector<RawPrediction>* grad) {
  if (raw.size() != match.size()) throw InvalidDimension("multibox loss: predictions and matches differ in count");
  std::size_t total_pos = 0;
  for (std::size_t n = 0; n < raw.size(); ++n) {
    if (raw[n].num_priors != match[n].num_priors()) {
      throw InvalidDimension("multibox loss: prediction has " + std::to_string(raw[n].num_priors) +
                             " priors, match has " + std::to_string(match[n].num_priors()));
    }
    for (int label : match[n].labels) {
      if (label < 0 || static_cast<std::size_t>(label) >= raw[n].num_labels) {
        throw InvalidDimension("multibox loss: target label " + std::to_string(label) + " outside 0.." +
                               std::to_string(raw[n].num_labels - 1));
      }
    }
    total_pos += match[n].num_positive();
  }
  const double norm = static_cast<double>(std::max<std::size_t>(total_pos, 1));
  if (grad) {
    grad->clear();
    for (const auto& r : raw) grad->emplace_back(r.num_priors, r.num_labels);
  }

  double loc_sum = 0, conf_sum = 0;
  std::vector<double> probs, bg_loss;
  for (std::size_t n = 0; n < raw.size(); ++n) {
    const RawPrediction& r = raw[n];
    const MatchResult& m = match[n];
    const std::size_t L = r.num_labels, P = r.num_priors;

    // Per-prior softmax and log-sum-exp.
    probs.assign(P * L, 0.0);
    std::vector<double> lse(P);
    for (std::size_t p = 0; p < P; ++p) {
      double mx = r.logit(p, 0);
      for (std::size_t j = 1; j < L; ++j) mx = std::max(mx, r.logit(p, j));
      double z = 0;
      for (std::size_t j = 0; j < L; ++j) z += std::exp(r.logit(p, j) - mx);
      lse[p] = mx + std::log(z);
      for (std::size_t j = 0; j < L; ++j) probs[p * L + j] = std::exp(r.logit(p, j) - lse[p]);
    }

    std::vector<std::size_t> negatives;
    std::size_t pos = 0;
    for (std::size_t p = 0; p < P; ++p) {
      if (m.positive(p)) {
        ++pos;
      } else {
        negatives.push_back(p);
      }
    }
    const auto want = static_cast<std::size_t>(opts.neg_pos_ratio * static_cast<double>(std::max<std::size_t>(pos, 1)));
    const std::size_t num_neg = std::min(want, negatives.size());
    // Hardest negatives: largest background cross-entropy, ties by prior index.
    std::stable_sort(negatives.begin(), negatives.end(), [&](std::size_t a, std::size_t b) {
      return lse[a] - r.logit(a, 0) > lse[b] - r.logit(b, 0);
    });
    negatives.resize(num_neg);

    auto add_ce = [&](std::size_t p, std::size_t target) {
      conf_sum += lse[p] - r.logit(p, target);
      if (grad) {
        auto& g = (*grad)[n];
        for (std::size_t j = 0; j < L; ++j) {
          g.logits[p * L + j] += (probs[p * L + j] - (j == target ? 1.0 : 0.0)) / norm;
        }
      }
    };

    for (std::size_t p = 0; p < P; ++p) {
      if (!m.positive(p)) continue;
      add_ce(p, static_cast<std::size_t>(m.labels[p]));
      for (std::size_t k = 0; k < 4; ++k) {
        const double u = r.offsets[p * 4 + k] - m.targets[p][k];
        loc_sum += smooth_l1(u);
        if (grad) (*grad)[n].offsets[p * 4 + k] += opts.loc_weight * smooth_l1_grad(u) / norm;
      }
    }
    for (std::size_t p : negatives) add_ce(p, 0);
  }

  LossTerms t;
  t.loc = loc_sum / norm;
  t.conf = conf_sum / norm;
  t.total = t.conf + opts.loc_weight * t.loc;
  return t;
}

LossTerms multibox_loss(const RawPrediction& raw, const MatchResult& match, const LossOptions& opts) {
  return multibox_loss(std::span<const RawPrediction>(&raw, 1), std::span<const MatchResult>(&match, 1), opts);
}

void TrainConfig::validate() const {
  if (schedule.empty()) throw ConfigError("train.schedule must list at least one phase");
  for (const auto& p : schedule) {
    if (!(p.lr > 0)) throw ConfigError("train.schedule learning rates must be positive");
  }
  if (batch_size == 0) throw ConfigError("train.batch_size must be >= 1");
  if (momentum < 0 || momentum >= 1) throw ConfigError("train.momentum must lie in [0, 1)");
  if (weight_decay < 0) throw ConfigError("train.weight_decay must be non-negative");
  if (neg_pos_ratio < 0) throw ConfigError("train.neg_pos_ratio must be non-negative");
  if (!(match_iou > 0 && match_iou <= 1)) throw ConfigError("train.match_iou must lie in (0, 1]");
}

std::size_t TrainConfig::total_iterations() const noexcept {
  std::size_t n = 0;
  for (const auto& p : schedule) n += p.iterations;
  return n;
}

double TrainConfig::lr_at(std::size_t t) const {
  if (schedule.empty()) throw ConfigError("empty learning-rate schedule");
  std::size_t end = 0;
  for (const auto& p : schedule) {
    end += p.iterations;
    if (t < end) return p.lr;
  }
  return schedule.back().lr;
}

std::string format_train_log(const std::vector<TrainLogRow>& rows) {
  std::string out = "iteration,lr,total,loc,conf\n";
  char line[160];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%zu,%.6g,%.6f,%.6f,%.6f\n", r.iteration, r.lr, r.loss.total, r.loss.loc,
                  r.loss.conf);
    out += line;
  }
  return out;
}

void SgdMomentum::step(std::vector<ParamRef>& params, const Gradients& grads, double lr) {
  if (velocity_.empty()) {
    for (const auto& p : params) velocity_.emplace_back(p.values->size(), 0.0f);
  }
  const auto m = static_cast<float>(momentum_);
  const auto wd = static_cast<float>(weight_decay_);
  const auto step = static_cast<float>(lr);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& w = *params[i].values;
    auto& v = velocity_[i];
    const auto& g = grads[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      v[k] = m * v[k] + g[k] + wd * w[k];
      w[k] -= step * v[k];
    }
  }
}

LossTerms batch_loss(const Model& model, const std::vector<const Sample*>& batch, const std::optional<SecretKey>& key,
                     const TrainConfig& cfg, Gradients* grads, std::vector<RawPrediction>* raw_out) {
  const DetectorConfig& dc = model.config();
  const bool keyed = !dc.encrypted_sites.empty() || dc.input_block_size != 0;
  if (keyed && !key) throw ConfigError("model uses keyed transforms but no key was supplied for training");
  const SiteTransform transform = key ? make_site_transform(dc, *key) : SiteTransform{};

  std::vector<Image> inputs;
  inputs.reserve(batch.size());
  for (const Sample* s : batch) inputs.push_back(transform_input(s->image, dc, key));
  std::vector<const Image*> ptrs;
  for (const auto& im : inputs) ptrs.push_back(&im);
  const Tensor x = make_batch(ptrs);

  const auto priors = generate_priors(dc);
  std::vector<MatchResult> matches;
  for (const Sample* s : batch) matches.push_back(match_priors(priors, s->objects, cfg.match_iou));

  const LossOptions lo{cfg.loc_weight, cfg.neg_pos_ratio};
  if (!grads) {
    auto raw = model.forward(x, transform);
    const auto terms = multibox_loss(raw, matches, lo);
    if (raw_out) *raw_out = std::move(raw);
    return terms;
  }
  ForwardCache cache;
  auto raw = model.forward_train(x, transform, cache);
  std::vector<RawPrediction> d_raw;
  const auto terms = multibox_loss(raw, matches, lo, &d_raw);
  model.backward(cache, transform, d_raw, *grads);
  if (raw_out) *raw_out = std::move(raw);
  return terms;
}

TrainResult train(Model& model, const Dataset& dataset, const std::optional<SecretKey>& key, const TrainConfig& cfg,
                  std::uint64_t model_seed, const TrainProgress& progress) {
  cfg.validate();
  const std::size_t total = cfg.total_iterations();
  if (total > 0 && dataset.samples.empty()) throw ConfigError("cannot train on an empty dataset");
  const DetectorConfig& dc = model.config();
  for (const auto& s : dataset.samples) {
    if (s.image.height() != dc.input_size || s.image.width() != dc.input_size || s.image.channels() != 3) {
      throw InvalidDimension("training sample " + s.id + " does not match the model input size");
    }
  }

  TrainResult result;
  SgdMomentum opt(cfg.momentum, cfg.weight_decay);
  auto params = model.parameters();
  const std::size_t N = dataset.samples.size();
  std::vector<std::size_t> order(N);
  std::size_t cursor = N, epoch = 0;

  for (std::size_t it = 0; it < total; ++it) {
    std::vector<Sample> augmented;
    augmented.reserve(cfg.batch_size);
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      if (cursor == N) {
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng(mix_seed(cfg.seed, 0x5eed0000ull + epoch++));
        for (std::size_t i = N - 1; i > 0; --i) {
          std::swap(order[i], order[static_cast<std::size_t>(shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i)))]);
        }
        cursor = 0;
      }
      const Sample& s = dataset.samples[order[cursor++]];
      augmented.push_back(cfg.augment ? augment(s, mix_seed(cfg.seed, it * cfg.batch_size + b)) : s);
    }
    std::vector<const Sample*> batch;
    for (const auto& s : augmented) batch.push_back(&s);

    Gradients grads = model.zero_gradients();
    const LossTerms loss = batch_loss(model, batch, key, cfg, &grads);
    const double lr = cfg.lr_at(it);
    if (!std::isfinite(loss.total)) {
      std::ostringstream os;
      os << "training diverged at iteration " << (it + 1) << " (lr " << lr << "): loss total=" << loss.total
         << " loc=" << loss.loc << " conf=" << loss.conf;
      throw DivergenceError(os.str());
    }
    opt.step(params, grads, lr);
    result.log.push_back({it + 1, lr, loss});
    if (progress) progress(result.log.back());
  }

  result.checkpoint =
      make_checkpoint(model, model_seed, cfg.seed, total, key ? key->fingerprint() : std::string());
  return result;
}

GradCheckReport grad_check(const std::function<double(std::span<const double>)>& loss,
                           const std::function<std::vector<double>(std::span<const double>)>& gradient,
                           std::vector<double> params, double eps, double abs_floor) {
  const auto analytic = gradient(params);
  if (analytic.size() != params.size()) throw InvalidDimension("grad_check: gradient size mismatch");
  GradCheckReport report;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + eps;
    const double up = loss(params);
    params[i] = saved - eps;
    const double down = loss(params);
    params[i] = saved;
    const double numeric = (up - down) / (2 * eps);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), abs_floor});
    const double rel = std::abs(analytic[i] - numeric) / denom;
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_index = i;
    }
    ++report.checked;
  }
  return report;
}

}  // namespace featlock
