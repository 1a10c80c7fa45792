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

#include "featlock/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "featlock/errors.hpp"

namespace featlock {

double interpolated_ap(const std::vector<double>& precision, const std::vector<double>& recall, ApProtocol protocol) {
  if (precision.empty()) return 0.0;
  if (protocol == ApProtocol::kVoc07ElevenPoint) {
    double sum = 0;
    for (int i = 0; i <= 10; ++i) {
      const double t = i / 10.0;
      double p = 0;
      for (std::size_t k = 0; k < recall.size(); ++k)
        if (recall[k] >= t) p = std::max(p, precision[k]);
      sum += p;
    }
    return sum / 11.0;
  }
  // Precision envelope, then sum of rectangles where recall changes.
  std::vector<double> mrec{0.0}, mpre{0.0};
  mrec.insert(mrec.end(), recall.begin(), recall.end());
  mpre.insert(mpre.end(), precision.begin(), precision.end());
  mrec.push_back(1.0);
  mpre.push_back(0.0);
  for (std::size_t i = mpre.size() - 1; i > 0; --i) mpre[i - 1] = std::max(mpre[i - 1], mpre[i]);
  double ap = 0;
  for (std::size_t i = 1; i < mrec.size(); ++i) {
    if (mrec[i] != mrec[i - 1]) ap += (mrec[i] - mrec[i - 1]) * mpre[i];
  }
  return ap;
}

ApResult average_precision_detail(const std::vector<ScoredDetection>& detections,
                                  const std::vector<std::vector<GroundTruth>>& ground_truth, double iou_threshold,
                                  ApProtocol protocol) {
  ApResult result;
  std::vector<std::vector<bool>> claimed(ground_truth.size());
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    claimed[i].assign(ground_truth[i].size(), false);
    for (const auto& g : ground_truth[i]) result.num_gt += g.difficult ? 0 : 1;
  }
  if (result.num_gt == 0) {
    result.no_ground_truth = true;
    return result;
  }

  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (detections[a].score != detections[b].score) return detections[a].score > detections[b].score;
    return detections[a].image < detections[b].image;
  });

  std::vector<double> precision, recall;
  std::size_t tp = 0, fp = 0;
  for (std::size_t idx : order) {
    const auto& d = detections[idx];
    if (d.image >= ground_truth.size()) throw InvalidDimension("detection refers to an unknown image");
    const auto& gts = ground_truth[d.image];
    double best = -1;
    std::size_t best_g = 0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double o = iou(d.box, gts[g].box);
      if (o > best) {
        best = o;
        best_g = g;
      }
    }
    if (best >= iou_threshold) {
      if (gts[best_g].difficult) continue;
      if (!claimed[d.image][best_g]) {
        claimed[d.image][best_g] = true;
        ++tp;
      } else {
        ++fp;
      }
    } else {
      ++fp;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(result.num_gt));
  }
  result.ap = interpolated_ap(precision, recall, protocol);
  return result;
}

double average_precision(const std::vector<ScoredDetection>& detections,
                         const std::vector<std::vector<GroundTruth>>& ground_truth, double iou_threshold,
                         ApProtocol protocol) {
  return average_precision_detail(detections, ground_truth, iou_threshold, protocol).ap;
}

std::string protocol_name(Protocol p) {
  switch (p) {
    case Protocol::kBaseline: return "baseline";
    case Protocol::kCorrect: return "correct";
    case Protocol::kPlain: return "plain";
    case Protocol::kIncorrect: return "incorrect";
  }
  return "?";
}

Protocol protocol_from_name(const std::string& name) {
  if (name == "baseline") return Protocol::kBaseline;
  if (name == "correct") return Protocol::kCorrect;
  if (name == "plain") return Protocol::kPlain;
  if (name == "incorrect") return Protocol::kIncorrect;
  throw ConfigError("unknown protocol '" + name + "' (expected correct, plain, incorrect or baseline)");
}

std::vector<std::vector<Detection>> detect(const Model& model, const Dataset& dataset, const KeyMode& mode,
                                           const EvalOptions& opts) {
  const DetectorConfig& dc = model.config();
  const auto& key = mode.key();
  const SiteTransform transform = key ? make_site_transform(dc, *key) : SiteTransform{};
  const auto priors = generate_priors(dc);
  const std::size_t bs = std::max<std::size_t>(1, opts.batch_size);

  std::vector<std::vector<Detection>> out;
  out.reserve(dataset.samples.size());
  for (std::size_t start = 0; start < dataset.samples.size(); start += bs) {
    const std::size_t end = std::min(dataset.samples.size(), start + bs);
    std::vector<Image> inputs;
    for (std::size_t i = start; i < end; ++i) inputs.push_back(transform_input(dataset.samples[i].image, dc, key));
    std::vector<const Image*> ptrs;
    for (const auto& im : inputs) ptrs.push_back(&im);
    const auto raw = model.forward(make_batch(ptrs), transform);
    for (const auto& r : raw) out.push_back(decode_and_nms(r, priors, opts.nms));
  }
  return out;
}

EvalReport score_detections(const std::vector<std::vector<Detection>>& detections, const Dataset& dataset,
                            Protocol protocol, const EvalOptions& opts) {
  if (detections.size() != dataset.samples.size()) throw InvalidDimension("one detection list per image expected");
  EvalReport report;
  report.protocol = protocol;
  report.class_names = dataset.class_names;
  report.num_images = dataset.samples.size();
  const std::size_t C = dataset.num_classes();

  std::vector<std::vector<ScoredDetection>> per_class(C);
  std::vector<std::vector<std::vector<GroundTruth>>> gts(C, std::vector<std::vector<GroundTruth>>(report.num_images));
  for (std::size_t i = 0; i < report.num_images; ++i) {
    for (const auto& o : dataset.samples[i].objects) {
      if (o.label < 0 || static_cast<std::size_t>(o.label) >= C) throw SchemaError("ground-truth label out of range");
      gts[static_cast<std::size_t>(o.label)][i].push_back({o.box, o.difficult});
      report.num_gt += o.difficult ? 0 : 1;
    }
    for (const auto& d : detections[i]) {
      if (d.label < 0 || static_cast<std::size_t>(d.label) >= C) continue;
      per_class[static_cast<std::size_t>(d.label)].push_back({i, d.score, d.box});
      ++report.num_detections;
    }
  }
  if (report.num_gt == 0) throw ProtocolError("evaluation needs at least one ground-truth object");

  double sum = 0;
  for (std::size_t c = 0; c < C; ++c) {
    const auto r = average_precision_detail(per_class[c], gts[c], opts.iou_threshold, opts.ap_protocol);
    report.per_class_ap.push_back(r.ap);
    report.class_without_gt.push_back(r.no_ground_truth);
    sum += r.ap;
  }
  report.map_value = C ? sum / static_cast<double>(C) : 0.0;
  return report;
}

EvalReport evaluate(const Model& model, const Dataset& dataset, const KeyMode& mode, const EvalOptions& opts) {
  if (dataset.samples.empty()) throw ProtocolError("cannot evaluate on an empty dataset");
  if (dataset.num_classes() != model.config().num_classes) {
    throw ConfigError("dataset has " + std::to_string(dataset.num_classes()) + " classes, model expects " +
                      std::to_string(model.config().num_classes));
  }
  return score_detections(detect(model, dataset, mode, opts), dataset, mode.protocol(), opts);
}

std::string format_eval_report(const EvalReport& report) {
  return format_eval_reports({report});
}

std::string format_eval_reports(const std::vector<EvalReport>& reports) {
  std::string out = "protocol,class,ap\n";
  char line[256];
  for (const auto& r : reports) {
    const std::string p = protocol_name(r.protocol);
    for (std::size_t c = 0; c < r.per_class_ap.size(); ++c) {
      std::snprintf(line, sizeof(line), "%s,%s,%.6f\n", p.c_str(), r.class_names[c].c_str(), r.per_class_ap[c]);
      out += line;
    }
    std::snprintf(line, sizeof(line), "%s,mAP,%.6f\n", p.c_str(), r.map_value);
    out += line;
  }
  return out;
}

}  // namespace featlock
