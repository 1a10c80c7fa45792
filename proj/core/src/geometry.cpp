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

#include "featlock/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "featlock/errors.hpp"

namespace featlock {

Box to_corner(const CenterBox& b) noexcept {
  return {b.cx - b.w / 2, b.cy - b.h / 2, b.cx + b.w / 2, b.cy + b.h / 2};
}

CenterBox to_center(const Box& b) noexcept {
  return {(b.xmin + b.xmax) / 2, (b.ymin + b.ymax) / 2, b.width(), b.height()};
}

double iou(const Box& a, const Box& b) {
  if (!a.valid() || !b.valid()) throw InvalidDimension("iou of a degenerate box");
  const double iw = std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin);
  const double ih = std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin);
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

std::array<double, 4> encode_box(const Box& gt, const PriorBox& prior) {
  const CenterBox g = to_center(gt);
  return {(g.cx - prior.cx) / prior.w, (g.cy - prior.cy) / prior.h, std::log(g.w / prior.w),
          std::log(g.h / prior.h)};
}

Box decode_box(const std::array<double, 4>& d, const PriorBox& prior) {
  const CenterBox c{prior.cx + d[0] * prior.w, prior.cy + d[1] * prior.h, prior.w * std::exp(d[2]),
                    prior.h * std::exp(d[3])};
  return to_corner(c);
}

}  // namespace featlock
