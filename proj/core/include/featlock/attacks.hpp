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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "featlock/checkpoint.hpp"
#include "featlock/data.hpp"
#include "featlock/evaluation.hpp"
#include "featlock/rng.hpp"
#include "featlock/training.hpp"

namespace featlock {

// One row of a protection table (per encrypted site or per block size).
struct AttackSuiteResult {
  std::string method;  // "feature", "shf", "baseline" or "proposed"
  int site = 0;
  std::size_t block_size = 0;
  double correct_map = 0;
  double plain_map = 0;
  double incorrect_map_mean = 0;
  double incorrect_map_std = 0;
  std::size_t n_wrong_keys = 0;
  std::vector<double> incorrect_maps;
};

using KeySampler = std::function<SecretKey(Rng&)>;

struct WrongKeyOptions {
  std::size_t n = 20;
  std::uint64_t seed = 1234;
  std::size_t key_length = 16;
  // Replaces the default uniform random byte sampler (test hook).
  KeySampler sampler;
  // Resample keys whose fingerprint equals the checkpoint's.
  bool exclude_true_key = true;
  // Resample keys whose transforms are all identity when a non-identity one exists.
  bool exclude_identity = true;
};

struct WrongKeyResult {
  std::vector<double> maps;
  double mean = 0;
  double std_dev = 0;  // population standard deviation
  std::size_t resampled = 0;
};

// Unauthorized use without any transform. Takes no key by construction.
EvalReport run_plain(const Checkpoint& ckpt, const Dataset& dataset, const EvalOptions& opts = {});
// Unauthorized use with n random keys. Only the stored fingerprint of the true key is consulted.
WrongKeyResult run_wrong_keys(const Checkpoint& ckpt, const Dataset& dataset, const WrongKeyOptions& wk,
                              const EvalOptions& opts = {});

// Correct, Plain and Incorrect protocols for one trained checkpoint.
AttackSuiteResult attack_suite(const Checkpoint& ckpt, const SecretKey& key, const Dataset& dataset,
                               const WrongKeyOptions& wk, const EvalOptions& opts = {});

struct SweepSettings {
  DetectorConfig detector;  // encrypted_sites / input_block_size are overwritten per row
  TrainConfig train;
  std::uint64_t model_seed = 1;
  SecretKey key;
  WrongKeyOptions wrong_keys;
  EvalOptions eval;
  bool include_baseline = true;
  // shf_sweep only: also train the feature-map method at this site for comparison.
  std::optional<int> proposed_site;
  std::function<void(const std::string&)> log;
  // Receives every trained checkpoint with its row label (e.g. "site2", "shf48").
  std::function<void(const std::string&, const Checkpoint&)> on_checkpoint;
};

std::vector<AttackSuiteResult> site_sweep(const Dataset& train_set, const Dataset& test_set,
                                          const std::vector<int>& sites, const SweepSettings& settings);
// Validates every block size against the input size before any training starts.
std::vector<AttackSuiteResult> shf_sweep(const Dataset& train_set, const Dataset& test_set,
                                         const std::vector<std::size_t>& block_sizes, const SweepSettings& settings);

// "site,correct,plain,incorrect_mean,incorrect_std"
std::string format_site_table(const std::vector<AttackSuiteResult>& rows);
// "method,block_size,correct,plain,incorrect_mean"
std::string format_shf_table(const std::vector<AttackSuiteResult>& rows);

}  // namespace featlock
