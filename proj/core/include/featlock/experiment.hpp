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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "featlock/data.hpp"
#include "featlock/detector.hpp"
#include "featlock/training.hpp"

namespace featlock {

inline constexpr int kExperimentVersion = 1;
inline constexpr char kRunsDirEnv[] = "FEATLOCK_RUNS_DIR";

struct DatasetSource {
  enum class Kind { kSynthetic, kDirectory };
  Kind kind = Kind::kSynthetic;
  SynthSpec train;
  SynthSpec test;
  std::filesystem::path path;
  std::string train_split = "train";
  std::string test_split = "test";

  friend bool operator==(const DatasetSource&, const DatasetSource&) = default;
};

struct AttackSettings {
  std::size_t n_wrong_keys = 20;
  std::uint64_t seed = 1234;

  friend bool operator==(const AttackSettings&, const AttackSettings&) = default;
};

struct ExperimentConfig {
  int version = kExperimentVersion;
  std::string name = "experiment";
  std::uint64_t seed = 1;  // model initialization
  DatasetSource dataset;
  DetectorConfig detector;
  TrainConfig train;
  AttackSettings attack;
  std::string output_dir;  // empty: $FEATLOCK_RUNS_DIR or ./runs

  // Throws ConfigError/SchemaError; with check_paths, also requires dataset paths to exist.
  void validate(bool check_paths = true) const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// Desk-scale defaults: 2000 train / 500 test synthetic images at 96x96.
ExperimentConfig default_experiment();

std::string serialize_experiment(const ExperimentConfig& cfg);
ExperimentConfig parse_experiment(const std::string& text);
ExperimentConfig load_experiment(const std::filesystem::path& path);

Dataset load_train_split(const ExperimentConfig& cfg);
Dataset load_test_split(const ExperimentConfig& cfg);

// runs/<name>/ with checkpoint, logs/, reports/, plots/. `out` overrides the root,
// then $FEATLOCK_RUNS_DIR, then cfg.output_dir, then ./runs.
std::filesystem::path run_directory(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& out);
void create_run_layout(const std::filesystem::path& run_dir);

}  // namespace featlock
