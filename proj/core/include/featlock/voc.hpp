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
#include <map>
#include <string>
#include <vector>

#include "featlock/data.hpp"

namespace featlock {

// Pixel coordinates follow the VOC 1-based convention: 1 <= xmin < xmax <= width.
struct VocObject {
  std::string name;
  double xmin = 0, ymin = 0, xmax = 0, ymax = 0;
  bool difficult = false;

  friend bool operator==(const VocObject&, const VocObject&) = default;
};

struct VocRecord {
  std::string filename;
  int width = 0;
  int height = 0;
  int depth = 3;
  std::vector<VocObject> objects;

  friend bool operator==(const VocRecord&, const VocRecord&) = default;
};

// Throws ParseError (with line number) on malformed XML and SchemaError on
// missing or out-of-range fields.
VocRecord parse_voc_annotation(const std::string& xml_text);
std::string format_voc_annotation(const VocRecord& record);

// Conversions between normalized samples and VOC pixel records.
VocRecord to_voc_record(const Sample& sample, const std::vector<std::string>& class_names,
                        const std::string& filename);
std::vector<Object> objects_from_voc(const VocRecord& record, const std::vector<std::string>& class_names);

// On-disk layout shared by synthetic exports and real VOC-style data:
//   <root>/manifest.json, <root>/images/<id>.png, <root>/annotations/<id>.xml
struct DatasetManifest {
  std::vector<std::string> class_names;
  std::map<std::string, std::vector<std::string>> splits;
};

DatasetManifest read_manifest(const std::filesystem::path& root);
void write_dataset(const std::filesystem::path& root, const std::map<std::string, const Dataset*>& splits);
// Loads one split and resizes every image to target x target (0 keeps native size).
Dataset load_dataset(const std::filesystem::path& root, const std::string& split, std::size_t target);

}  // namespace featlock
