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

#include "featlock/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "featlock/errors.hpp"

namespace featlock {

FeatureMap::FeatureMap(std::size_t channels, std::size_t height, std::size_t width, float fill)
    : c_(channels), h_(height), w_(width), values_(channels * height * width, fill) {}

FeatureMap::FeatureMap(std::size_t channels, std::size_t height, std::size_t width,
                       std::vector<float> values)
    : c_(channels), h_(height), w_(width), values_(std::move(values)) {
  if (values_.size() != c_ * h_ * w_) {
    throw InvalidDimension("feature map buffer holds " + std::to_string(values_.size()) +
                           " values, shape needs " + std::to_string(c_ * h_ * w_));
  }
}

bool FeatureMap::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](float v) { return std::isfinite(v); });
}

}  // namespace featlock
