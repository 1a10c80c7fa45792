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
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "featlock/geometry.hpp"
#include "featlock/keyed_transforms.hpp"

namespace featlock {

struct Object {
  Box box;         // normalized corner form
  int label = 0;   // 0-based class id, background excluded
  bool difficult = false;

  friend bool operator==(const Object&, const Object&) = default;
};

struct Sample {
  std::string id;
  Image image;  // (3, H, W), values in [0, 1]
  std::vector<Object> objects;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Dataset {
  std::vector<std::string> class_names;
  std::vector<Sample> samples;

  std::size_t num_classes() const noexcept { return class_names.size(); }
};

enum class Shape { kCircle, kSquare, kTriangle };

Shape shape_from_name(const std::string& name);
std::string shape_name(Shape s);

struct SynthSpec {
  std::size_t num_images = 2000;
  std::size_t image_size = 96;
  std::vector<std::string> classes = {"circle", "square", "triangle"};
  int min_objects = 1;
  int max_objects = 3;
  // Object side length as a fraction of the image side.
  double min_size = 0.15;
  double max_size = 0.5;
  double noise = 0.04;
  std::uint64_t seed = 1;

  void validate() const;
  friend bool operator==(const SynthSpec&, const SynthSpec&) = default;
};

// Rasterize one shape filled with `color` and return the tight normalized box of
// the pixels actually painted. Pixel (x, y) is painted when its center lies inside.
Box draw_shape(Image& img, Shape shape, double cx, double cy, double side,
               const std::array<float, 3>& color);

Dataset generate_dataset(const SynthSpec& spec);
// Image `index` of the dataset, generated independently from mix_seed(spec.seed, index).
Sample generate_sample(const SynthSpec& spec, std::size_t index);

// Area-weighted resample of an image to (C, out_h, out_w).
Image resize_area(const Image& img, std::size_t out_h, std::size_t out_w);
Sample resize_and_normalize(const Sample& sample, std::size_t target);

struct AugmentOptions {
  double flip_probability = 0.5;
  double crop_probability = 0.5;
  double photometric_probability = 0.5;
  double min_crop_scale = 0.3;
  int crop_attempts = 10;
  // Brightness and contrast factors are drawn from [1 - jitter, 1 + jitter].
  double photometric_jitter = 0.2;
};

Sample flip_horizontal(const Sample& sample);
// Crop to the pixel window [x0, x0+w) x [y0, y0+h), keeping objects whose centers
// fall inside, then resample back to the original size. Empty result if no object survives.
std::optional<Sample> crop_sample(const Sample& sample, std::size_t x0, std::size_t y0,
                                  std::size_t w, std::size_t h);
Sample augment(const Sample& sample, std::uint64_t seed, const AugmentOptions& opts = {});

// Quantize to 8-bit levels, clamping into [0, 1].
void quantize_u8(Image& img);

}  // namespace featlock
