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
#include <string>
#include <vector>

#include "featlock/attacks.hpp"
#include "featlock/detector.hpp"
#include "featlock/keyed_transforms.hpp"

namespace featlock {

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

// Grouped bar chart (correct / plain / incorrect mean) with one group per row.
std::string attack_table_svg(const std::vector<AttackSuiteResult>& rows, const std::string& title);

// Copy of `img` with each detection drawn as a 1-pixel rectangle in a per-class color.
Image draw_detections(const Image& img, const std::vector<Detection>& detections);

}  // namespace featlock
