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

#include "featlock/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "featlock/errors.hpp"

namespace featlock {
namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

void im2col(const float* img, std::size_t c, std::size_t h, std::size_t w, std::size_t k, std::size_t stride,
            std::size_t pad, std::size_t oh, std::size_t ow, float* col) {
  const std::size_t P = oh * ow;
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t ky = 0; ky < k; ++ky)
      for (std::size_t kx = 0; kx < k; ++kx) {
        float* row = col + ((ch * k + ky) * k + kx) * P;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(pad);
          float* dst = row + oy * ow;
          if (iy < 0 || iy >= static_cast<long>(h)) {
            std::fill_n(dst, ow, 0.0f);
            continue;
          }
          const float* src = img + (ch * h + static_cast<std::size_t>(iy)) * w;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(pad);
            dst[ox] = (ix < 0 || ix >= static_cast<long>(w)) ? 0.0f : src[ix];
          }
        }
      }
}

void col2im(const float* col, std::size_t c, std::size_t h, std::size_t w, std::size_t k, std::size_t stride,
            std::size_t pad, std::size_t oh, std::size_t ow, float* img) {
  const std::size_t P = oh * ow;
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t ky = 0; ky < k; ++ky)
      for (std::size_t kx = 0; kx < k; ++kx) {
        const float* row = col + ((ch * k + ky) * k + kx) * P;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(pad);
          if (iy < 0 || iy >= static_cast<long>(h)) continue;
          float* dst = img + (ch * h + static_cast<std::size_t>(iy)) * w;
          const float* src = row + oy * ow;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(pad);
            if (ix >= 0 && ix < static_cast<long>(w)) dst[ix] += src[ox];
          }
        }
      }
}

}  // namespace

Conv2d::Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride,
               std::size_t pad)
    : in_c_(in_channels), out_c_(out_channels), k_(kernel), stride_(stride), pad_(pad),
      weight_(out_channels * in_channels * kernel * kernel, 0.0f), bias_(out_channels, 0.0f) {
  if (in_c_ == 0 || out_c_ == 0 || k_ == 0 || stride_ == 0) throw InvalidDimension("conv dimensions must be positive");
}

void Conv2d::init(Rng& rng) {
  const double std_dev = std::sqrt(2.0 / static_cast<double>(col_rows()));
  for (auto& w : weight_) w = static_cast<float>(std_dev * rng.normal());
  std::fill(bias_.begin(), bias_.end(), 0.0f);
}

Tensor Conv2d::forward(const Tensor& x, std::vector<float>* cols) const {
  if (x.c != in_c_) {
    throw InvalidDimension("conv expects " + std::to_string(in_c_) + " input channels, got " + std::to_string(x.c));
  }
  const std::size_t oh = output_size(x.h), ow = output_size(x.w), P = oh * ow, K = col_rows();
  Tensor y(x.n, out_c_, oh, ow);
  std::vector<float> local;
  std::vector<float>& buf = cols ? *cols : local;
  buf.resize(cols ? x.n * K * P : K * P);

  const ConstMapMat W(weight_.data(), static_cast<Eigen::Index>(out_c_), static_cast<Eigen::Index>(K));
  const Eigen::Map<const Eigen::VectorXf> b(bias_.data(), static_cast<Eigen::Index>(out_c_));
  for (std::size_t n = 0; n < x.n; ++n) {
    float* col = buf.data() + (cols ? n * K * P : 0);
    im2col(x.sample(n), in_c_, x.h, x.w, k_, stride_, pad_, oh, ow, col);
    ConstMapMat C(col, static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(P));
    MapMat Y(y.sample(n), static_cast<Eigen::Index>(out_c_), static_cast<Eigen::Index>(P));
    Y.noalias() = W * C;
    Y.colwise() += b;
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& dy, const Tensor& x_shape, std::span<const float> cols,
                        std::span<float> dweight, std::span<float> dbias, bool need_dx) const {
  const std::size_t P = dy.h * dy.w, K = col_rows();
  if (cols.size() != dy.n * K * P) throw InvalidDimension("conv backward: im2col cache size mismatch");
  const ConstMapMat W(weight_.data(), static_cast<Eigen::Index>(out_c_), static_cast<Eigen::Index>(K));
  MapMat dW(dweight.data(), static_cast<Eigen::Index>(out_c_), static_cast<Eigen::Index>(K));

  Tensor dx;
  std::vector<float> dcol;
  if (need_dx) {
    dx = Tensor(x_shape.n, x_shape.c, x_shape.h, x_shape.w);
    dcol.resize(K * P);
  }
  for (std::size_t n = 0; n < dy.n; ++n) {
    ConstMapMat dY(dy.sample(n), static_cast<Eigen::Index>(out_c_), static_cast<Eigen::Index>(P));
    ConstMapMat C(cols.data() + n * K * P, static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(P));
    dW.noalias() += dY * C.transpose();
    for (std::size_t o = 0; o < out_c_; ++o) {
      const float* row = dy.sample(n) + o * P;
      float acc = 0.0f;
      for (std::size_t p = 0; p < P; ++p) acc += row[p];
      dbias[o] += acc;
    }
    if (need_dx) {
      MapMat dC(dcol.data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(P));
      dC.noalias() = W.transpose() * dY;
      col2im(dcol.data(), in_c_, x_shape.h, x_shape.w, k_, stride_, pad_, dy.h, dy.w, dx.sample(n));
    }
  }
  return dx;
}

void relu_inplace(Tensor& t) {
  for (auto& v : t.data) v = v > 0.0f ? v : 0.0f;
}

void relu_backward_inplace(Tensor& dy, const Tensor& activation) {
  for (std::size_t i = 0; i < dy.data.size(); ++i) {
    if (!(activation.data[i] > 0.0f)) dy.data[i] = 0.0f;
  }
}

}  // namespace featlock
