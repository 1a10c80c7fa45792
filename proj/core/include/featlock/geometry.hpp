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

namespace featlock {

// Corner-form box in normalized [0,1] image coordinates.
struct Box {
  double xmin = 0, ymin = 0, xmax = 0, ymax = 0;

  double width() const noexcept { return xmax - xmin; }
  double height() const noexcept { return ymax - ymin; }
  double area() const noexcept { return width() * height(); }
  bool valid() const noexcept { return xmin < xmax && ymin < ymax; }

  friend bool operator==(const Box&, const Box&) = default;
};

// Center-form box; priors are stored this way.
struct CenterBox {
  double cx = 0, cy = 0, w = 0, h = 0;

  friend bool operator==(const CenterBox&, const CenterBox&) = default;
};

using PriorBox = CenterBox;

Box to_corner(const CenterBox& b) noexcept;
CenterBox to_center(const Box& b) noexcept;

// Intersection over union. Throws InvalidDimension on a degenerate box.
double iou(const Box& a, const Box& b);

// Offsets (dcx, dcy, dlog w, dlog h) of `gt` relative to `prior`, unit variances.
std::array<double, 4> encode_box(const Box& gt, const PriorBox& prior);
Box decode_box(const std::array<double, 4>& offsets, const PriorBox& prior);

}  // namespace featlock
