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

#include "featlock/experiment.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "featlock/errors.hpp"
#include "featlock/voc.hpp"
#include "json_io.hpp"

namespace featlock {

void ExperimentConfig::validate(bool check_paths) const {
  if (version != kExperimentVersion) {
    throw SchemaError("unsupported experiment version " + std::to_string(version) + " (expected " +
                      std::to_string(kExperimentVersion) + ")");
  }
  if (name.empty() || name.find('/') != std::string::npos) throw ConfigError("experiment name must be a plain word");
  detector.validate();
  train.validate();
  if (attack.n_wrong_keys == 0 || attack.n_wrong_keys > 100000) throw ConfigError("attack.n_wrong_keys must be >= 1");
  if (dataset.kind == DatasetSource::Kind::kSynthetic) {
    dataset.train.validate();
    dataset.test.validate();
    if (dataset.train.classes.size() != detector.num_classes || dataset.test.classes.size() != detector.num_classes) {
      throw ConfigError("detector.num_classes does not match the synthetic class list");
    }
  } else if (check_paths && !std::filesystem::exists(dataset.path / "manifest.json")) {
    throw ConfigError("dataset path " + dataset.path.string() + " has no manifest.json");
  }
}

ExperimentConfig default_experiment() {
  ExperimentConfig cfg;
  cfg.dataset.train.num_images = 2000;
  cfg.dataset.train.seed = 11;
  cfg.dataset.test.num_images = 500;
  cfg.dataset.test.seed = 22;
  return cfg;
}

std::string serialize_experiment(const ExperimentConfig& cfg) {
  Json j;
  j["version"] = cfg.version;
  j["name"] = cfg.name;
  j["seed"] = cfg.seed;
  Json ds;
  if (cfg.dataset.kind == DatasetSource::Kind::kSynthetic) {
    ds["kind"] = "synthetic";
    ds["train"] = to_json(cfg.dataset.train);
    ds["test"] = to_json(cfg.dataset.test);
  } else {
    ds["kind"] = "directory";
    ds["path"] = cfg.dataset.path.string();
    ds["train_split"] = cfg.dataset.train_split;
    ds["test_split"] = cfg.dataset.test_split;
  }
  j["dataset"] = ds;
  j["detector"] = to_json(cfg.detector);
  j["train"] = to_json(cfg.train);
  j["attack"] = {{"n_wrong_keys", cfg.attack.n_wrong_keys}, {"seed", cfg.attack.seed}};
  j["output_dir"] = cfg.output_dir;
  return j.dump(2) + "\n";
}

ExperimentConfig parse_experiment(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("experiment config: ") + e.what());
  }
  check_keys(j, {"version", "name", "seed", "dataset", "detector", "train", "attack", "output_dir"}, "experiment");
  if (!j.contains("version")) throw SchemaError("experiment config lacks a version field");
  ExperimentConfig cfg = default_experiment();
  try {
    cfg.version = j.at("version").get<int>();
    if (cfg.version != kExperimentVersion) {
      throw SchemaError("unsupported experiment version " + std::to_string(cfg.version));
    }
    cfg.name = j.value("name", cfg.name);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    if (j.contains("dataset")) {
      const Json& ds = j["dataset"];
      const std::string kind = ds.value("kind", "synthetic");
      if (kind == "synthetic") {
        check_keys(ds, {"kind", "train", "test"}, "dataset");
        cfg.dataset.kind = DatasetSource::Kind::kSynthetic;
        if (ds.contains("train")) cfg.dataset.train = synth_spec_from_json(ds["train"]);
        if (ds.contains("test")) cfg.dataset.test = synth_spec_from_json(ds["test"]);
      } else if (kind == "directory") {
        check_keys(ds, {"kind", "path", "train_split", "test_split"}, "dataset");
        cfg.dataset.kind = DatasetSource::Kind::kDirectory;
        cfg.dataset.path = ds.at("path").get<std::string>();
        cfg.dataset.train_split = ds.value("train_split", cfg.dataset.train_split);
        cfg.dataset.test_split = ds.value("test_split", cfg.dataset.test_split);
      } else {
        throw SchemaError("dataset.kind must be 'synthetic' or 'directory'");
      }
    }
    if (j.contains("detector")) cfg.detector = detector_config_from_json(j["detector"]);
    if (j.contains("train")) cfg.train = train_config_from_json(j["train"]);
    if (j.contains("attack")) {
      check_keys(j["attack"], {"n_wrong_keys", "seed"}, "attack");
      cfg.attack.n_wrong_keys = j["attack"].value("n_wrong_keys", cfg.attack.n_wrong_keys);
      cfg.attack.seed = j["attack"].value("seed", cfg.attack.seed);
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("experiment config: ") + e.what());
  }
  cfg.validate(false);
  return cfg;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  ExperimentConfig cfg = parse_experiment(ss.str());
  if (cfg.dataset.kind == DatasetSource::Kind::kDirectory && cfg.dataset.path.is_relative()) {
    cfg.dataset.path = path.parent_path() / cfg.dataset.path;
  }
  cfg.validate(true);
  return cfg;
}

namespace {

Dataset load_split(const ExperimentConfig& cfg, bool train_split) {
  if (cfg.dataset.kind == DatasetSource::Kind::kSynthetic) {
    SynthSpec spec = train_split ? cfg.dataset.train : cfg.dataset.test;
    spec.image_size = cfg.detector.input_size;
    return generate_dataset(spec);
  }
  Dataset ds = load_dataset(cfg.dataset.path, train_split ? cfg.dataset.train_split : cfg.dataset.test_split,
                            cfg.detector.input_size);
  if (ds.num_classes() != cfg.detector.num_classes) {
    throw ConfigError("dataset lists " + std::to_string(ds.num_classes()) + " classes, detector.num_classes is " +
                      std::to_string(cfg.detector.num_classes));
  }
  return ds;
}

}  // namespace

Dataset load_train_split(const ExperimentConfig& cfg) { return load_split(cfg, true); }
Dataset load_test_split(const ExperimentConfig& cfg) { return load_split(cfg, false); }

std::filesystem::path run_directory(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& out) {
  std::filesystem::path root;
  if (out) {
    root = *out;
  } else if (const char* env = std::getenv(kRunsDirEnv); env && *env) {
    root = env;
  } else if (!cfg.output_dir.empty()) {
    root = cfg.output_dir;
  } else {
    root = "runs";
  }
  return root / cfg.name;
}

void create_run_layout(const std::filesystem::path& run_dir) {
  for (const char* sub : {"logs", "reports", "plots"}) std::filesystem::create_directories(run_dir / sub);
}

}  // namespace featlock
