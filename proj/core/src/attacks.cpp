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

#include "featlock/attacks.hpp"

#include <cmath>
#include <cstdio>

#include "featlock/errors.hpp"

namespace featlock {
namespace {

SecretKey random_key(Rng& rng, std::size_t length) {
  std::vector<std::uint8_t> bytes(length);
  for (auto& b : bytes) b = static_cast<std::uint8_t>(rng.next() >> 56);
  return SecretKey(std::move(bytes));
}

// True when the key's transforms reduce to the identity although the model
// admits a non-identity transform.
bool identity_transform(const DetectorConfig& dc, const SecretKey& key) {
  bool nontrivial_exists = false;
  for (int s : dc.encrypted_sites) {
    const std::size_t c = dc.pyramid[static_cast<std::size_t>(s - 1)].channels;
    if (c < 2) continue;
    nontrivial_exists = true;
    if (!site_permutation(key, s, c).is_identity()) return false;
  }
  if (dc.input_block_size > 0) {
    const std::size_t n = dc.input_block_size * dc.input_block_size * 3;
    if (n >= 2) {
      nontrivial_exists = true;
      if (!derive_permutation(key, n).is_identity()) return false;
    }
  }
  return nontrivial_exists;
}

}  // namespace

EvalReport run_plain(const Checkpoint& ckpt, const Dataset& dataset, const EvalOptions& opts) {
  const Model model = model_from_checkpoint(ckpt);
  return evaluate(model, dataset, KeyMode::plain(), opts);
}

WrongKeyResult run_wrong_keys(const Checkpoint& ckpt, const Dataset& dataset, const WrongKeyOptions& wk,
                              const EvalOptions& opts) {
  if (wk.n == 0) throw ConfigError("at least one wrong key is required");
  const Model model = model_from_checkpoint(ckpt);
  Rng rng(wk.seed);
  WrongKeyResult result;
  for (std::size_t i = 0; i < wk.n; ++i) {
    SecretKey key;
    for (int attempt = 0;; ++attempt) {
      if (attempt > 1000) throw ProtocolError("could not sample an admissible wrong key");
      key = wk.sampler ? wk.sampler(rng) : random_key(rng, wk.key_length);
      const bool collides = wk.exclude_true_key && !ckpt.key_fingerprint.empty() &&
                            key.fingerprint() == ckpt.key_fingerprint;
      const bool trivial = wk.exclude_identity && identity_transform(ckpt.config, key);
      if (!collides && !trivial) break;
      ++result.resampled;
    }
    result.maps.push_back(evaluate(model, dataset, KeyMode::incorrect(key), opts).map_value);
  }
  double sum = 0;
  for (double m : result.maps) sum += m;
  result.mean = sum / static_cast<double>(result.maps.size());
  double var = 0;
  for (double m : result.maps) var += (m - result.mean) * (m - result.mean);
  result.std_dev = std::sqrt(var / static_cast<double>(result.maps.size()));
  return result;
}

AttackSuiteResult attack_suite(const Checkpoint& ckpt, const SecretKey& key, const Dataset& dataset,
                               const WrongKeyOptions& wk, const EvalOptions& opts) {
  const Model model = model_from_checkpoint(ckpt);
  AttackSuiteResult row;
  row.site = ckpt.config.encrypted_sites.empty() ? 0 : ckpt.config.encrypted_sites.front();
  row.block_size = ckpt.config.input_block_size;
  row.correct_map = evaluate(model, dataset, KeyMode::correct(key), opts).map_value;
  row.plain_map = run_plain(ckpt, dataset, opts).map_value;
  const auto wrong = run_wrong_keys(ckpt, dataset, wk, opts);
  row.incorrect_map_mean = wrong.mean;
  row.incorrect_map_std = wrong.std_dev;
  row.incorrect_maps = wrong.maps;
  row.n_wrong_keys = wrong.maps.size();
  return row;
}

namespace {

AttackSuiteResult train_and_attack(const Dataset& train_set, const Dataset& test_set, DetectorConfig dc,
                                   const SweepSettings& s, const std::string& label) {
  if (s.log) s.log("training " + label);
  Model model(dc, s.model_seed);
  const bool keyed = !dc.encrypted_sites.empty() || dc.input_block_size != 0;
  auto result = train(model, train_set, keyed ? std::optional<SecretKey>(s.key) : std::nullopt, s.train, s.model_seed);
  if (s.on_checkpoint) s.on_checkpoint(label, result.checkpoint);
  if (s.log) s.log("attacking " + label);
  return attack_suite(result.checkpoint, s.key, test_set, s.wrong_keys, s.eval);
}

}  // namespace

std::vector<AttackSuiteResult> site_sweep(const Dataset& train_set, const Dataset& test_set,
                                          const std::vector<int>& sites, const SweepSettings& settings) {
  std::vector<AttackSuiteResult> rows;
  if (sites.empty()) return rows;
  for (int site : sites) {
    DetectorConfig dc = settings.detector;
    dc.encrypted_sites = {site};
    dc.input_block_size = 0;
    dc.validate();
  }
  for (int site : sites) {
    DetectorConfig dc = settings.detector;
    dc.encrypted_sites = {site};
    dc.input_block_size = 0;
    auto row = train_and_attack(train_set, test_set, dc, settings, "site" + std::to_string(site));
    row.method = "feature";
    rows.push_back(std::move(row));
  }
  if (settings.include_baseline) {
    DetectorConfig dc = settings.detector;
    dc.encrypted_sites.clear();
    dc.input_block_size = 0;
    auto row = train_and_attack(train_set, test_set, dc, settings, "baseline");
    row.method = "baseline";
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<AttackSuiteResult> shf_sweep(const Dataset& train_set, const Dataset& test_set,
                                         const std::vector<std::size_t>& block_sizes, const SweepSettings& settings) {
  for (std::size_t m : block_sizes) {
    if (m == 0 || settings.detector.input_size % m != 0) {
      throw InvalidDimension("block size " + std::to_string(m) + " does not divide input size " +
                             std::to_string(settings.detector.input_size));
    }
  }
  std::vector<AttackSuiteResult> rows;
  for (std::size_t m : block_sizes) {
    DetectorConfig dc = settings.detector;
    dc.encrypted_sites.clear();
    dc.input_block_size = m;
    auto row = train_and_attack(train_set, test_set, dc, settings, "shf" + std::to_string(m));
    row.method = "shf";
    rows.push_back(std::move(row));
  }
  if (settings.proposed_site) {
    DetectorConfig dc = settings.detector;
    dc.encrypted_sites = {*settings.proposed_site};
    dc.input_block_size = 0;
    auto row = train_and_attack(train_set, test_set, dc, settings, "site" + std::to_string(*settings.proposed_site));
    row.method = "proposed";
    rows.push_back(std::move(row));
  }
  if (settings.include_baseline) {
    DetectorConfig dc = settings.detector;
    dc.encrypted_sites.clear();
    dc.input_block_size = 0;
    auto row = train_and_attack(train_set, test_set, dc, settings, "baseline");
    row.method = "baseline";
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_site_table(const std::vector<AttackSuiteResult>& rows) {
  std::string out = "site,correct,plain,incorrect_mean,incorrect_std\n";
  char line[256];
  for (const auto& r : rows) {
    const std::string site = r.method == "baseline" ? "baseline" : std::to_string(r.site);
    std::snprintf(line, sizeof(line), "%s,%.6f,%.6f,%.6f,%.6f\n", site.c_str(), r.correct_map, r.plain_map,
                  r.incorrect_map_mean, r.incorrect_map_std);
    out += line;
  }
  return out;
}

std::string format_shf_table(const std::vector<AttackSuiteResult>& rows) {
  std::string out = "method,block_size,correct,plain,incorrect_mean\n";
  char line[256];
  for (const auto& r : rows) {
    std::string block = r.method == "shf" ? std::to_string(r.block_size) : "";
    if (r.method == "proposed") block = "site" + std::to_string(r.site);
    std::snprintf(line, sizeof(line), "%s,%s,%.6f,%.6f,%.6f\n", r.method.c_str(), block.c_str(), r.correct_map,
                  r.plain_map, r.incorrect_map_mean);
    out += line;
  }
  return out;
}

}  // namespace featlock
