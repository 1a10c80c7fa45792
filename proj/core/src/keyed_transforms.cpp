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

#include "featlock/keyed_transforms.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <cstring>
#include <limits>
#include <numeric>
#include <sstream>

#include "featlock/errors.hpp"

namespace featlock {
namespace {

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::string hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    s.push_back(kDigits[b >> 4]);
    s.push_back(kDigits[b & 0xF]);
  }
  return s;
}

void check_bijection(std::span<const std::uint32_t> sources) {
  std::vector<bool> seen(sources.size(), false);
  for (auto s : sources) {
    if (s >= sources.size() || seen[s]) {
      throw InvalidDimension("permutation is not a bijection on {1.." +
                             std::to_string(sources.size()) + "}");
    }
    seen[s] = true;
  }
}

}  // namespace

std::string SecretKey::fingerprint() const {
  std::array<std::uint8_t, SHA256_DIGEST_LENGTH> digest{};
  SHA256(bytes_.data(), bytes_.size(), digest.data());
  return hex(std::span(digest).first(8));
}

PermutationVector PermutationVector::from_zero_based(std::vector<std::uint32_t> sources) {
  check_bijection(sources);
  return PermutationVector(std::move(sources));
}

PermutationVector PermutationVector::from_one_based(std::span<const std::uint32_t> alpha) {
  std::vector<std::uint32_t> sources;
  sources.reserve(alpha.size());
  for (auto a : alpha) {
    if (a == 0) throw InvalidDimension("one-based permutation contains 0");
    sources.push_back(a - 1);
  }
  return from_zero_based(std::move(sources));
}

PermutationVector PermutationVector::identity(std::size_t c) {
  std::vector<std::uint32_t> sources(c);
  std::iota(sources.begin(), sources.end(), 0u);
  return PermutationVector(std::move(sources));
}

std::vector<std::uint32_t> PermutationVector::one_based() const {
  std::vector<std::uint32_t> alpha(sources_);
  for (auto& a : alpha) ++a;
  return alpha;
}

bool PermutationVector::is_identity() const noexcept {
  for (std::size_t i = 0; i < sources_.size(); ++i) {
    if (sources_[i] != i) return false;
  }
  return true;
}

KeyStream::KeyStream(const SecretKey& key, std::uint32_t site, std::uint32_t count)
    : key_(key.bytes().begin(), key.bytes().end()) {
  const std::size_t tag_len = sizeof(kPermutationTag) - 1;
  prefix_.assign(kPermutationTag, kPermutationTag + tag_len);
  put_le(prefix_, site, 4);
  put_le(prefix_, count, 4);
}

void KeyStream::refill() {
  std::vector<std::uint8_t> message = prefix_;
  put_le(message, counter_++, 8);
  // Key bytes go last so the fixed-width fields above stay unambiguous.
  message.insert(message.end(), key_.begin(), key_.end());
  SHA256(message.data(), message.size(), block_.data());
  offset_ = 0;
}

std::uint64_t KeyStream::next_u64() {
  if (offset_ + 8 > block_.size()) refill();
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{block_[offset_ + i]} << (8 * i);
  offset_ += 8;
  return v;
}

std::uint64_t KeyStream::uniform(std::uint64_t bound) {
  // Largest multiple of bound that fits in 2^64, expressed without overflow.
  const std::uint64_t rem = (std::numeric_limits<std::uint64_t>::max() - bound + 1) % bound;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - rem;
  for (;;) {
    const std::uint64_t x = next_u64();
    if (x <= limit) return x % bound;
  }
}

PermutationVector derive_permutation(const SecretKey& key, std::size_t c, std::uint32_t site) {
  if (c == 0) throw InvalidDimension("cannot derive a permutation over 0 channels");
  if (c > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidDimension("channel count exceeds 32 bits");
  }
  KeyStream stream(key, site, static_cast<std::uint32_t>(c));
  std::vector<std::uint32_t> alpha(c);
  std::iota(alpha.begin(), alpha.end(), 0u);
  for (std::size_t i = c - 1; i >= 1; --i) {
    const auto j = static_cast<std::size_t>(stream.uniform(i + 1));
    std::swap(alpha[i], alpha[j]);
  }
  return PermutationVector::from_zero_based(std::move(alpha));
}

void apply_permutation(std::span<const float> in, std::span<float> out, std::size_t plane,
                       const PermutationVector& p) {
  const std::size_t c = p.size();
  if (in.size() != c * plane || out.size() != c * plane) {
    throw InvalidDimension("permutation over " + std::to_string(c) +
                           " channels does not match buffer of " + std::to_string(in.size()));
  }
  for (std::size_t i = 0; i < c; ++i) {
    std::copy_n(in.data() + p.source(i) * plane, plane, out.data() + i * plane);
  }
}

FeatureMap apply_permutation(const FeatureMap& x, const PermutationVector& p) {
  if (p.size() != x.channels()) {
    throw InvalidDimension("permutation has " + std::to_string(p.size()) +
                           " entries but feature map has " + std::to_string(x.channels()) +
                           " channels");
  }
  FeatureMap out(x.channels(), x.height(), x.width());
  apply_permutation(x.values(), out.values(), x.plane_size(), p);
  return out;
}

PermutationVector invert_permutation(const PermutationVector& p) {
  std::vector<std::uint32_t> inv(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) inv[p.source(i)] = static_cast<std::uint32_t>(i);
  return PermutationVector::from_zero_based(std::move(inv));
}

PermutationVector compose(const PermutationVector& first, const PermutationVector& second) {
  if (first.size() != second.size()) throw InvalidDimension("cannot compose permutations of unequal size");
  std::vector<std::uint32_t> out(first.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = first.source(second.source(i));
  return PermutationVector::from_zero_based(std::move(out));
}

Image shuffle_blocks(const Image& img, const PermutationVector& block_perm, std::size_t m) {
  const std::size_t C = img.channels(), H = img.height(), W = img.width();
  if (m == 0 || H % m != 0 || W % m != 0) {
    throw InvalidDimension("block size " + std::to_string(m) + " does not divide image " +
                           std::to_string(H) + "x" + std::to_string(W));
  }
  if (block_perm.size() != m * m * C) {
    throw InvalidDimension("block permutation size does not equal M*M*C");
  }
  Image out(C, H, W);
  std::vector<float> flat(m * m * C);
  for (std::size_t by = 0; by < H; by += m) {
    for (std::size_t bx = 0; bx < W; bx += m) {
      std::size_t idx = 0;
      for (std::size_t ch = 0; ch < C; ++ch)
        for (std::size_t r = 0; r < m; ++r)
          for (std::size_t col = 0; col < m; ++col) flat[idx++] = img.at(ch, by + r, bx + col);
      idx = 0;
      for (std::size_t ch = 0; ch < C; ++ch)
        for (std::size_t r = 0; r < m; ++r)
          for (std::size_t col = 0; col < m; ++col) out.at(ch, by + r, bx + col) = flat[block_perm.source(idx++)];
    }
  }
  return out;
}

Image encrypt_image(const Image& img, const SecretKey& key, std::size_t block_size) {
  if (block_size == 0) throw InvalidDimension("block size must be positive");
  const auto p = derive_permutation(key, block_size * block_size * img.channels());
  return shuffle_blocks(img, p, block_size);
}

Image decrypt_image(const Image& img, const SecretKey& key, std::size_t block_size) {
  if (block_size == 0) throw InvalidDimension("block size must be positive");
  const auto p = derive_permutation(key, block_size * block_size * img.channels());
  return shuffle_blocks(img, invert_permutation(p), block_size);
}

std::string format_golden_line(const PermutationVector& p) {
  std::ostringstream os;
  os << p.size();
  for (auto a : p.one_based()) os << ' ' << a;
  return os.str();
}

PermutationVector parse_golden_line(const std::string& line) {
  std::istringstream is(line);
  std::size_t c = 0;
  if (!(is >> c)) throw ParseError("golden line lacks a channel count: '" + line + "'");
  std::vector<std::uint32_t> alpha;
  std::uint32_t a = 0;
  while (is >> a) alpha.push_back(a);
  if (!is.eof()) throw ParseError("golden line has a non-numeric entry: '" + line + "'");
  if (alpha.size() != c) {
    throw ParseError("golden line declares c=" + std::to_string(c) + " but lists " +
                     std::to_string(alpha.size()) + " entries");
  }
  return PermutationVector::from_one_based(alpha);
}

}  // namespace featlock
