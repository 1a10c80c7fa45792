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

#include "json_io.hpp"

#include <algorithm>

#include "featlock/errors.hpp"

namespace featlock {
namespace {

template <typename T>
T field(const Json& j, const char* key, const T& fallback, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw SchemaError(where + "." + key + " has the wrong type");
  }
}

void require_object(const Json& j, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + " must be a JSON object");
}

}  // namespace

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  require_object(j, where);
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw SchemaError("unknown field '" + key + "' in " + where);
    }
  }
}

Json to_json(const DetectorConfig& c) {
  Json pyramid = Json::array();
  for (const auto& s : c.pyramid) pyramid.push_back({{"channels", s.channels}, {"stride", s.stride}});
  return {{"input_size", c.input_size},
          {"num_classes", c.num_classes},
          {"pyramid", pyramid},
          {"head_levels", c.head_levels},
          {"encrypted_sites", c.encrypted_sites},
          {"priors_per_cell", c.priors_per_cell},
          {"prior_scales", c.prior_scales},
          {"min_scale", c.min_scale},
          {"max_scale", c.max_scale},
          {"input_block_size", c.input_block_size}};
}

DetectorConfig detector_config_from_json(const Json& j) {
  const std::string where = "detector";
  check_keys(j,
             {"input_size", "num_classes", "pyramid", "head_levels", "encrypted_sites", "priors_per_cell",
              "prior_scales", "min_scale", "max_scale", "input_block_size"},
             where);
  DetectorConfig c;
  c.input_size = field(j, "input_size", c.input_size, where);
  c.num_classes = field(j, "num_classes", c.num_classes, where);
  if (j.contains("pyramid")) {
    if (!j["pyramid"].is_array()) throw SchemaError("detector.pyramid must be an array");
    c.pyramid.clear();
    for (const auto& s : j["pyramid"]) {
      check_keys(s, {"channels", "stride"}, "detector.pyramid[]");
      c.pyramid.push_back({field<std::size_t>(s, "channels", 16, where), field<std::size_t>(s, "stride", 2, where)});
    }
  }
  c.head_levels = field(j, "head_levels", c.head_levels, where);
  c.encrypted_sites = field(j, "encrypted_sites", c.encrypted_sites, where);
  c.priors_per_cell = field(j, "priors_per_cell", c.priors_per_cell, where);
  c.prior_scales = field(j, "prior_scales", c.prior_scales, where);
  c.min_scale = field(j, "min_scale", c.min_scale, where);
  c.max_scale = field(j, "max_scale", c.max_scale, where);
  c.input_block_size = field(j, "input_block_size", c.input_block_size, where);
  return c;
}

Json to_json(const TrainConfig& c) {
  Json schedule = Json::array();
  for (const auto& p : c.schedule) schedule.push_back({{"iterations", p.iterations}, {"lr", p.lr}});
  return {{"schedule", schedule},
          {"momentum", c.momentum},
          {"weight_decay", c.weight_decay},
          {"batch_size", c.batch_size},
          {"loc_weight", c.loc_weight},
          {"neg_pos_ratio", c.neg_pos_ratio},
          {"match_iou", c.match_iou},
          {"augment", c.augment},
          {"seed", c.seed}};
}

TrainConfig train_config_from_json(const Json& j) {
  const std::string where = "train";
  check_keys(j,
             {"schedule", "momentum", "weight_decay", "batch_size", "loc_weight", "neg_pos_ratio", "match_iou",
              "augment", "seed"},
             where);
  TrainConfig c;
  if (j.contains("schedule")) {
    if (!j["schedule"].is_array()) throw SchemaError("train.schedule must be an array");
    c.schedule.clear();
    for (const auto& p : j["schedule"]) {
      check_keys(p, {"iterations", "lr"}, "train.schedule[]");
      c.schedule.push_back({field<std::size_t>(p, "iterations", 0, where), field<double>(p, "lr", 1e-3, where)});
    }
  }
  c.momentum = field(j, "momentum", c.momentum, where);
  c.weight_decay = field(j, "weight_decay", c.weight_decay, where);
  c.batch_size = field(j, "batch_size", c.batch_size, where);
  c.loc_weight = field(j, "loc_weight", c.loc_weight, where);
  c.neg_pos_ratio = field(j, "neg_pos_ratio", c.neg_pos_ratio, where);
  c.match_iou = field(j, "match_iou", c.match_iou, where);
  c.augment = field(j, "augment", c.augment, where);
  c.seed = field(j, "seed", c.seed, where);
  return c;
}

Json to_json(const SynthSpec& s) {
  return {{"num_images", s.num_images}, {"image_size", s.image_size}, {"classes", s.classes},
          {"min_objects", s.min_objects}, {"max_objects", s.max_objects}, {"min_size", s.min_size},
          {"max_size", s.max_size},     {"noise", s.noise},           {"seed", s.seed}};
}

SynthSpec synth_spec_from_json(const Json& j) {
  const std::string where = "synthetic";
  check_keys(j, {"num_images", "image_size", "classes", "min_objects", "max_objects", "min_size", "max_size", "noise",
                 "seed"},
             where);
  SynthSpec s;
  s.num_images = field(j, "num_images", s.num_images, where);
  s.image_size = field(j, "image_size", s.image_size, where);
  s.classes = field(j, "classes", s.classes, where);
  s.min_objects = field(j, "min_objects", s.min_objects, where);
  s.max_objects = field(j, "max_objects", s.max_objects, where);
  s.min_size = field(j, "min_size", s.min_size, where);
  s.max_size = field(j, "max_size", s.max_size, where);
  s.noise = field(j, "noise", s.noise, where);
  s.seed = field(j, "seed", s.seed, where);
  return s;
}

}  // namespace featlock
