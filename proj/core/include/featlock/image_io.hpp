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

#include <filesystem>

#include "featlock/keyed_transforms.hpp"

namespace featlock {

// 8-bit RGB PNG. Values are clamped to [0,1] and rounded to the nearest level.
void write_png(const std::filesystem::path& path, const Image& img);
// Reads gray, gray+alpha, RGB or RGBA PNGs into a (3, H, W) image in [0,1].
Image read_png(const std::filesystem::path& path);

}  // namespace featlock
