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

#include "featlock/rng.hpp"
#include "featlock/tensor.hpp"

namespace featlock {

// Square-kernel 2-D convolution over NCHW batches, lowered to im2col + GEMM.
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride,
         std::size_t pad);

  // He-normal weights, zero bias.
  void init(Rng& rng);

  std::size_t in_channels() const noexcept { return in_c_; }
  std::size_t out_channels() const noexcept { return out_c_; }
  std::size_t output_size(std::size_t input) const noexcept { return (input + 2 * pad_ - k_) / stride_ + 1; }

  // `cols`, when given, receives the im2col buffers needed by backward().
  Tensor forward(const Tensor& x, std::vector<float>* cols = nullptr) const;
  // Accumulates into dweight/dbias; returns dx unless `need_dx` is false.
  Tensor backward(const Tensor& dy, const Tensor& x_shape, std::span<const float> cols,
                  std::span<float> dweight, std::span<float> dbias, bool need_dx) const;

  std::vector<float>& weight() noexcept { return weight_; }
  std::vector<float>& bias() noexcept { return bias_; }
  const std::vector<float>& weight() const noexcept { return weight_; }
  const std::vector<float>& bias() const noexcept { return bias_; }

 private:
  std::size_t col_rows() const noexcept { return in_c_ * k_ * k_; }

  std::size_t in_c_ = 0, out_c_ = 0, k_ = 3, stride_ = 1, pad_ = 1;
  std::vector<float> weight_;  // (out_c, in_c * k * k), row-major
  std::vector<float> bias_;
};

void relu_inplace(Tensor& t);
// dy *= (activation > 0), elementwise.
void relu_backward_inplace(Tensor& dy, const Tensor& activation);

}  // namespace featlock
