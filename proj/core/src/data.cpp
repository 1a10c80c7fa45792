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

#include "featlock/data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "featlock/errors.hpp"
#include "featlock/rng.hpp"

namespace featlock {

Shape shape_from_name(const std::string& name) {
  if (name == "circle") return Shape::kCircle;
  if (name == "square") return Shape::kSquare;
  if (name == "triangle") return Shape::kTriangle;
  throw ConfigError("unknown synthetic class '" + name + "' (expected circle, square or triangle)");
}

std::string shape_name(Shape s) {
  switch (s) {
    case Shape::kCircle: return "circle";
    case Shape::kSquare: return "square";
    case Shape::kTriangle: return "triangle";
  }
  return "?";
}

void SynthSpec::validate() const {
  if (image_size < 8) throw ConfigError("synthetic image_size must be at least 8");
  if (classes.empty()) throw ConfigError("synthetic spec needs at least one class");
  for (const auto& c : classes) shape_from_name(c);
  if (min_objects < 0 || max_objects < min_objects) {
    throw ConfigError("synthetic objects range is empty");
  }
  if (!(min_size > 0 && min_size <= max_size && max_size <= 1.0)) {
    throw ConfigError("synthetic size range must satisfy 0 < min_size <= max_size <= 1");
  }
  if (!(noise >= 0 && noise <= 1)) throw ConfigError("synthetic noise must lie in [0, 1]");
}

void quantize_u8(Image& img) {
  for (auto& v : img.values()) v = std::round(std::clamp(v, 0.0f, 1.0f) * 255.0f) / 255.0f;
}

Box draw_shape(Image& img, Shape shape, double cx, double cy, double side,
               const std::array<float, 3>& color) {
  const auto H = static_cast<long>(img.height());
  const auto W = static_cast<long>(img.width());
  const double half = side / 2;
  // Triangle: apex at top center, base along the bottom edge of the bounding square.
  const double ax = cx, ay = cy - half, bx = cx - half, by = cy + half, qx = cx + half, qy = cy + half;
  auto edge = [](double x0, double y0, double x1, double y1, double px, double py) {
    return (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0);
  };
  auto inside = [&](double px, double py) {
    switch (shape) {
      case Shape::kCircle: return (px - cx) * (px - cx) + (py - cy) * (py - cy) <= half * half;
      case Shape::kSquare: return std::abs(px - cx) <= half && std::abs(py - cy) <= half;
      case Shape::kTriangle: {
        const double e0 = edge(ax, ay, bx, by, px, py);
        const double e1 = edge(bx, by, qx, qy, px, py);
        const double e2 = edge(qx, qy, ax, ay, px, py);
        return (e0 <= 0 && e1 <= 0 && e2 <= 0) || (e0 >= 0 && e1 >= 0 && e2 >= 0);
      }
    }
    return false;
  };
  long x_lo = W, y_lo = H, x_hi = -1, y_hi = -1;
  const long y_start = std::max(0L, static_cast<long>(std::floor(cy - half)) - 1);
  const long y_end = std::min(H - 1, static_cast<long>(std::ceil(cy + half)) + 1);
  const long x_start = std::max(0L, static_cast<long>(std::floor(cx - half)) - 1);
  const long x_end = std::min(W - 1, static_cast<long>(std::ceil(cx + half)) + 1);
  for (long y = y_start; y <= y_end; ++y) {
    for (long x = x_start; x <= x_end; ++x) {
      if (!inside(x + 0.5, y + 0.5)) continue;
      for (std::size_t ch = 0; ch < 3 && ch < img.channels(); ++ch) img.at(ch, y, x) = color[ch];
      x_lo = std::min(x_lo, x);
      x_hi = std::max(x_hi, x);
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
    }
  }
  if (x_hi < 0) return {};
  return {static_cast<double>(x_lo) / W, static_cast<double>(y_lo) / H,
          static_cast<double>(x_hi + 1) / W, static_cast<double>(y_hi + 1) / H};
}

Sample generate_sample(const SynthSpec& spec, std::size_t index) {
  Rng rng(mix_seed(spec.seed, index));
  const std::size_t S = spec.image_size;
  Sample sample;
  sample.id = "synth_" + std::to_string(index);
  sample.image = Image(3, S, S);

  std::array<float, 3> bg{};
  for (auto& v : bg) v = static_cast<float>(rng.uniform(0.2, 0.8));
  for (std::size_t ch = 0; ch < 3; ++ch) {
    auto plane = sample.image.channel(ch);
    std::fill(plane.begin(), plane.end(), bg[ch]);
  }

  const auto count = rng.uniform_int(spec.min_objects, spec.max_objects);
  std::vector<Box> placed;
  for (std::int64_t k = 0; k < count; ++k) {
    const auto label = static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(spec.classes.size()) - 1));
    const Shape shape = shape_from_name(spec.classes[static_cast<std::size_t>(label)]);
    // Keep a clearly visible color difference from the background.
    std::array<float, 3> color{};
    for (int attempt = 0; attempt < 100; ++attempt) {
      double dist = 0;
      for (std::size_t ch = 0; ch < 3; ++ch) {
        color[ch] = static_cast<float>(rng.uniform());
        dist += std::abs(color[ch] - bg[ch]);
      }
      if (dist >= 0.6) break;
    }
    for (int attempt = 0; attempt < 50; ++attempt) {
      const double side = rng.uniform(spec.min_size, spec.max_size) * static_cast<double>(S);
      const double half = side / 2;
      const double cx = rng.uniform(half, static_cast<double>(S) - half);
      const double cy = rng.uniform(half, static_cast<double>(S) - half);
      const double margin = 2.0 / static_cast<double>(S);
      const Box footprint{(cx - half) / S - margin, (cy - half) / S - margin, (cx + half) / S + margin,
                          (cy + half) / S + margin};
      const bool overlaps = std::any_of(placed.begin(), placed.end(), [&](const Box& b) {
        return footprint.xmin < b.xmax && b.xmin < footprint.xmax && footprint.ymin < b.ymax &&
               b.ymin < footprint.ymax;
      });
      if (overlaps) continue;
      const Box box = draw_shape(sample.image, shape, cx, cy, side, color);
      if (!box.valid()) continue;
      placed.push_back(box);
      sample.objects.push_back({box, label, false});
      break;
    }
  }

  if (spec.noise > 0) {
    for (auto& v : sample.image.values()) v += static_cast<float>(spec.noise * rng.normal());
  }
  quantize_u8(sample.image);
  return sample;
}

Dataset generate_dataset(const SynthSpec& spec) {
  spec.validate();
  Dataset ds;
  ds.class_names = spec.classes;
  ds.samples.reserve(spec.num_images);
  for (std::size_t i = 0; i < spec.num_images; ++i) ds.samples.push_back(generate_sample(spec, i));
  return ds;
}

namespace {

struct Tap {
  std::size_t src;
  double weight;
};

// For each output index, the source indices and overlap weights of the
// interval [o * scale, (o + 1) * scale) in source coordinates.
std::vector<std::vector<Tap>> area_taps(std::size_t in, std::size_t out) {
  std::vector<std::vector<Tap>> taps(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t o = 0; o < out; ++o) {
    const double lo = o * scale, hi = (o + 1) * scale;
    const auto first = static_cast<std::size_t>(std::floor(lo));
    const auto last = std::min(in - 1, static_cast<std::size_t>(std::ceil(hi)) - 1);
    double total = 0;
    for (std::size_t s = first; s <= last; ++s) {
      const double w = std::min(hi, s + 1.0) - std::max(lo, static_cast<double>(s));
      if (w > 0) {
        taps[o].push_back({s, w});
        total += w;
      }
    }
    for (auto& t : taps[o]) t.weight /= total;
  }
  return taps;
}

}  // namespace

Image resize_area(const Image& img, std::size_t out_h, std::size_t out_w) {
  if (out_h == 0 || out_w == 0) throw InvalidDimension("resize target must be positive");
  if (img.height() == out_h && img.width() == out_w) return img;
  const auto ty = area_taps(img.height(), out_h);
  const auto tx = area_taps(img.width(), out_w);
  Image rows(img.channels(), out_h, img.width());
  for (std::size_t ch = 0; ch < img.channels(); ++ch)
    for (std::size_t oy = 0; oy < out_h; ++oy)
      for (std::size_t x = 0; x < img.width(); ++x) {
        double acc = 0;
        for (const auto& t : ty[oy]) acc += t.weight * img.at(ch, t.src, x);
        rows.at(ch, oy, x) = static_cast<float>(acc);
      }
  Image out(img.channels(), out_h, out_w);
  for (std::size_t ch = 0; ch < img.channels(); ++ch)
    for (std::size_t oy = 0; oy < out_h; ++oy)
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        double acc = 0;
        for (const auto& t : tx[ox]) acc += t.weight * rows.at(ch, oy, t.src);
        out.at(ch, oy, ox) = static_cast<float>(acc);
      }
  return out;
}

Sample resize_and_normalize(const Sample& sample, std::size_t target) {
  Sample out = sample;
  out.image = resize_area(sample.image, target, target);
  return out;
}

Sample flip_horizontal(const Sample& sample) {
  Sample out = sample;
  const std::size_t W = sample.image.width();
  for (std::size_t ch = 0; ch < sample.image.channels(); ++ch)
    for (std::size_t y = 0; y < sample.image.height(); ++y)
      for (std::size_t x = 0; x < W; ++x) out.image.at(ch, y, x) = sample.image.at(ch, y, W - 1 - x);
  for (auto& o : out.objects) {
    const double xmin = 1.0 - o.box.xmax;
    const double xmax = 1.0 - o.box.xmin;
    o.box.xmin = xmin;
    o.box.xmax = xmax;
  }
  return out;
}

std::optional<Sample> crop_sample(const Sample& sample, std::size_t x0, std::size_t y0, std::size_t w,
                                  std::size_t h) {
  const std::size_t H = sample.image.height(), W = sample.image.width(), C = sample.image.channels();
  if (w == 0 || h == 0 || x0 + w > W || y0 + h > H) throw InvalidDimension("crop window outside image");
  const double fx0 = static_cast<double>(x0) / W, fy0 = static_cast<double>(y0) / H;
  const double fw = static_cast<double>(w) / W, fh = static_cast<double>(h) / H;

  Sample out;
  out.id = sample.id;
  for (const auto& o : sample.objects) {
    const CenterBox c = to_center(o.box);
    if (c.cx <= fx0 || c.cx >= fx0 + fw || c.cy <= fy0 || c.cy >= fy0 + fh) continue;
    Box b{(std::max(o.box.xmin, fx0) - fx0) / fw, (std::max(o.box.ymin, fy0) - fy0) / fh,
          (std::min(o.box.xmax, fx0 + fw) - fx0) / fw, (std::min(o.box.ymax, fy0 + fh) - fy0) / fh};
    b.xmin = std::clamp(b.xmin, 0.0, 1.0);
    b.ymin = std::clamp(b.ymin, 0.0, 1.0);
    b.xmax = std::clamp(b.xmax, 0.0, 1.0);
    b.ymax = std::clamp(b.ymax, 0.0, 1.0);
    if (!b.valid()) continue;
    out.objects.push_back({b, o.label, o.difficult});
  }
  if (!sample.objects.empty() && out.objects.empty()) return std::nullopt;

  Image window(C, h, w);
  for (std::size_t ch = 0; ch < C; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) window.at(ch, y, x) = sample.image.at(ch, y0 + y, x0 + x);
  out.image = resize_area(window, H, W);
  return out;
}

Sample augment(const Sample& sample, std::uint64_t seed, const AugmentOptions& opts) {
  Rng rng(seed);
  Sample out = sample;
  const std::size_t H = sample.image.height(), W = sample.image.width();

  if (rng.bernoulli(opts.crop_probability)) {
    bool cropped = false;
    for (int attempt = 0; attempt < opts.crop_attempts && !cropped; ++attempt) {
      const double sw = rng.uniform(opts.min_crop_scale, 1.0);
      const double sh = rng.uniform(opts.min_crop_scale, 1.0);
      if (sw / sh < 0.5 || sw / sh > 2.0) continue;
      const auto w = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(sw * W)));
      const auto h = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(sh * H)));
      const auto x0 = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(W - w)));
      const auto y0 = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(H - h)));
      if (auto c = crop_sample(sample, x0, y0, w, h)) {
        out = std::move(*c);
        cropped = true;
      }
    }
    if (!cropped) return sample;
  }

  if (rng.bernoulli(opts.flip_probability)) out = flip_horizontal(out);

  if (rng.bernoulli(opts.photometric_probability)) {
    const double j = opts.photometric_jitter;
    const auto contrast = static_cast<float>(rng.uniform(1.0 - j, 1.0 + j));
    const auto brightness = static_cast<float>(rng.uniform(1.0 - j, 1.0 + j));
    for (auto& v : out.image.values()) v = std::clamp(((v - 0.5f) * contrast + 0.5f) * brightness, 0.0f, 1.0f);
  }
  return out;
}

}  // namespace featlock
