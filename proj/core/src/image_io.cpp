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

#include "featlock/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "featlock/errors.hpp"

namespace featlock {

void write_png(const std::filesystem::path& path, const Image& img) {
  if (img.channels() != 3 && img.channels() != 1) {
    throw InvalidDimension("PNG output supports 1 or 3 channels, got " + std::to_string(img.channels()));
  }
  png_image desc;
  std::memset(&desc, 0, sizeof(desc));
  desc.version = PNG_IMAGE_VERSION;
  desc.width = static_cast<png_uint_32>(img.width());
  desc.height = static_cast<png_uint_32>(img.height());
  desc.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

  const std::size_t C = img.channels();
  std::vector<png_byte> pixels(C * img.width() * img.height());
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x)
      for (std::size_t ch = 0; ch < C; ++ch)
        pixels[(y * img.width() + x) * C + ch] =
            static_cast<png_byte>(std::lround(std::clamp(img.at(ch, y, x), 0.0f, 1.0f) * 255.0f));

  if (!png_image_write_to_file(&desc, path.c_str(), 0, pixels.data(), 0, nullptr)) {
    const std::string msg = desc.message;
    png_image_free(&desc);
    throw IoError("cannot write " + path.string() + ": " + msg);
  }
}

Image read_png(const std::filesystem::path& path) {
  png_image desc;
  std::memset(&desc, 0, sizeof(desc));
  desc.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&desc, path.c_str())) {
    const std::string msg = desc.message;
    png_image_free(&desc);
    throw IoError("cannot read " + path.string() + ": " + msg);
  }
  desc.format = PNG_FORMAT_RGB;
  std::vector<png_byte> pixels(PNG_IMAGE_SIZE(desc));
  if (!png_image_finish_read(&desc, nullptr, pixels.data(), 0, nullptr)) {
    const std::string msg = desc.message;
    png_image_free(&desc);
    throw IoError("cannot decode " + path.string() + ": " + msg);
  }
  const std::size_t H = desc.height, W = desc.width;
  Image img(3, H, W);
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x)
      for (std::size_t ch = 0; ch < 3; ++ch) img.at(ch, y, x) = pixels[(y * W + x) * 3 + ch] / 255.0f;
  return img;
}

}  // namespace featlock
