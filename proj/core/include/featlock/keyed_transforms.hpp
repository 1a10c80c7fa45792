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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "featlock/tensor.hpp"

namespace featlock {

// Opaque secret. Every permutation in the library is derived from these bytes.
class SecretKey {
 public:
  SecretKey() = default;
  explicit SecretKey(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}

  std::span<const std::uint8_t> bytes() const noexcept { return bytes_; }
  std::size_t size() const noexcept { return bytes_.size(); }
  bool empty() const noexcept { return bytes_.empty(); }

  // Hex SHA-256 of the key bytes, truncated to 16 hex digits. Safe to persist.
  std::string fingerprint() const;

  friend bool operator==(const SecretKey&, const SecretKey&) = default;

 private:
  std::vector<std::uint8_t> bytes_;
};

// Bijection on channel indices. Output channel i takes input channel source(i).
class PermutationVector {
 public:
  PermutationVector() = default;

  // Zero-based source indices; throws InvalidDimension unless a bijection on {0..c-1}.
  static PermutationVector from_zero_based(std::vector<std::uint32_t> sources);
  // One-based alpha vector as written in golden files.
  static PermutationVector from_one_based(std::span<const std::uint32_t> alpha);
  static PermutationVector identity(std::size_t c);

  std::size_t size() const noexcept { return sources_.size(); }
  std::uint32_t source(std::size_t i) const { return sources_[i]; }
  std::span<const std::uint32_t> sources() const noexcept { return sources_; }
  std::vector<std::uint32_t> one_based() const;
  bool is_identity() const noexcept;

  friend bool operator==(const PermutationVector&, const PermutationVector&) = default;

 private:
  explicit PermutationVector(std::vector<std::uint32_t> sources) : sources_(std::move(sources)) {}
  std::vector<std::uint32_t> sources_;
};

// Deterministic byte stream SHA-256(tag || le32(site) || le32(c) || le64(counter) || key),
// consumed eight bytes at a time as little-endian words.
class KeyStream {
 public:
  KeyStream(const SecretKey& key, std::uint32_t site, std::uint32_t count);

  std::uint64_t next_u64();
  // Unbiased draw from [0, bound) by rejection.
  std::uint64_t uniform(std::uint64_t bound);

 private:
  void refill();

  std::vector<std::uint8_t> prefix_;
  std::vector<std::uint8_t> key_;
  std::uint64_t counter_ = 0;
  std::array<std::uint8_t, 32> block_{};
  std::size_t offset_ = 32;
};

inline constexpr char kPermutationTag[] = "featlock.perm.v1";

// Keyed Fisher-Yates shuffle of {0..c-1}; `site` separates the streams used by
// different encrypted feature maps. Site 0 is the plain derivation.
PermutationVector derive_permutation(const SecretKey& key, std::size_t c, std::uint32_t site = 0);

// x'(i, j, k) = x(alpha_i, j, k).
FeatureMap apply_permutation(const FeatureMap& x, const PermutationVector& p);
// Same transform over a raw (c, plane) buffer; `out` must not alias `in`.
void apply_permutation(std::span<const float> in, std::span<float> out, std::size_t plane,
                       const PermutationVector& p);

PermutationVector invert_permutation(const PermutationVector& p);
PermutationVector compose(const PermutationVector& first, const PermutationVector& second);

using Image = FeatureMap;

// Block-wise pixel shuffling. Each M x M block is flattened in (channel, row, col)
// order and permuted by the single permutation derived from (key, M*M*C).
Image encrypt_image(const Image& img, const SecretKey& key, std::size_t block_size);
Image decrypt_image(const Image& img, const SecretKey& key, std::size_t block_size);
// Shared kernel for encrypt/decrypt with an explicit block permutation.
Image shuffle_blocks(const Image& img, const PermutationVector& block_perm, std::size_t block_size);

// Golden-vector text format: one line "c alpha_1 ... alpha_c" per case.
std::string format_golden_line(const PermutationVector& p);
PermutationVector parse_golden_line(const std::string& line);

}  // namespace featlock
