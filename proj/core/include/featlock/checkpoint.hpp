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
#include <string>
#include <utility>
#include <vector>

#include "featlock/detector.hpp"

namespace featlock {

// Trained model plus the metadata needed to re-run any protocol against it.
// Only the key fingerprint is recorded, never key bytes.
struct Checkpoint {
  DetectorConfig config;
  std::uint64_t model_seed = 0;
  std::uint64_t train_seed = 0;
  std::size_t iterations = 0;
  std::string key_fingerprint;
  std::string experiment;  // JSON echo of the experiment config, may be empty
  std::vector<std::pair<std::string, std::vector<float>>> parameters;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

Checkpoint make_checkpoint(const Model& model, std::uint64_t model_seed, std::uint64_t train_seed,
                           std::size_t iterations, const std::string& key_fingerprint);
Model model_from_checkpoint(const Checkpoint& ckpt);

// Archive layout: "FEATLOCK-CKPT\n", little-endian u64 header length, JSON header
// (config, metadata, parameter names/shapes/offsets), then raw float32 LE data.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace featlock
