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
#include <span>
#include <vector>

namespace featlock {

// Channel-major (c, h, w) activation tensor for a single sample.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(std::size_t channels, std::size_t height, std::size_t width, float fill = 0.0f);
  FeatureMap(std::size_t channels, std::size_t height, std::size_t width, std::vector<float> values);

  std::size_t channels() const noexcept { return c_; }
  std::size_t height() const noexcept { return h_; }
  std::size_t width() const noexcept { return w_; }
  std::size_t plane_size() const noexcept { return h_ * w_; }
  std::size_t size() const noexcept { return values_.size(); }

  float& at(std::size_t ch, std::size_t y, std::size_t x) { return values_[(ch * h_ + y) * w_ + x]; }
  float at(std::size_t ch, std::size_t y, std::size_t x) const { return values_[(ch * h_ + y) * w_ + x]; }

  std::span<float> channel(std::size_t ch) { return {values_.data() + ch * plane_size(), plane_size()}; }
  std::span<const float> channel(std::size_t ch) const {
    return {values_.data() + ch * plane_size(), plane_size()};
  }

  std::span<float> values() noexcept { return values_; }
  std::span<const float> values() const noexcept { return values_; }

  bool all_finite() const noexcept;

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  std::size_t c_ = 0, h_ = 0, w_ = 0;
  std::vector<float> values_;
};

// Batched NCHW tensor used by the network layers.
struct Tensor {
  std::size_t n = 0, c = 0, h = 0, w = 0;
  std::vector<float> data;

  Tensor() = default;
  Tensor(std::size_t n_, std::size_t c_, std::size_t h_, std::size_t w_, float fill = 0.0f)
      : n(n_), c(c_), h(h_), w(w_), data(n_ * c_ * h_ * w_, fill) {}

  std::size_t sample_size() const noexcept { return c * h * w; }
  std::size_t plane_size() const noexcept { return h * w; }

  float* sample(std::size_t i) noexcept { return data.data() + i * sample_size(); }
  const float* sample(std::size_t i) const noexcept { return data.data() + i * sample_size(); }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

}  // namespace featlock
