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

// nlohmann/json bindings for configuration structs; internal to the library.

#include "featlock/data.hpp"
#include "featlock/detector.hpp"
#include "featlock/training.hpp"
#include "json.hpp"

namespace featlock {

using Json = nlohmann::json;

Json to_json(const DetectorConfig& c);
DetectorConfig detector_config_from_json(const Json& j);
Json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const Json& j);
Json to_json(const SynthSpec& s);
SynthSpec synth_spec_from_json(const Json& j);

// Rejects keys outside `allowed` so typos surface as schema errors.
void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where);

}  // namespace featlock
