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

#include "featlock/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "featlock/errors.hpp"
#include "json_io.hpp"

namespace featlock {
namespace {

constexpr char kMagic[] = "FEATLOCK-CKPT\n";
constexpr std::size_t kMagicLen = sizeof(kMagic) - 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

}  // namespace

Checkpoint make_checkpoint(const Model& model, std::uint64_t model_seed, std::uint64_t train_seed,
                           std::size_t iterations, const std::string& key_fingerprint) {
  Checkpoint c;
  c.config = model.config();
  c.model_seed = model_seed;
  c.train_seed = train_seed;
  c.iterations = iterations;
  c.key_fingerprint = key_fingerprint;
  for (const auto& p : model.parameters()) c.parameters.emplace_back(p.name, *p.values);
  return c;
}

Model model_from_checkpoint(const Checkpoint& ckpt) {
  Model model(ckpt.config, ckpt.model_seed);
  auto params = model.parameters();
  if (params.size() != ckpt.parameters.size()) {
    throw ConfigError("checkpoint holds " + std::to_string(ckpt.parameters.size()) +
                      " parameter arrays, config builds " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, values] = ckpt.parameters[i];
    if (name != params[i].name || values.size() != params[i].values->size()) {
      throw ConfigError("checkpoint parameter '" + name + "' does not match the model (" + params[i].name + ")");
    }
    *params[i].values = values;
  }
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  Json header;
  header["format"] = 1;
  header["config"] = to_json(ckpt.config);
  header["model_seed"] = ckpt.model_seed;
  header["train_seed"] = ckpt.train_seed;
  header["iterations"] = ckpt.iterations;
  header["key_fingerprint"] = ckpt.key_fingerprint;
  header["experiment"] = ckpt.experiment.empty() ? Json(nullptr) : Json::parse(ckpt.experiment);
  Json arrays = Json::array();
  std::size_t offset = 0;
  for (const auto& [name, values] : ckpt.parameters) {
    arrays.push_back({{"name", name}, {"count", values.size()}, {"offset", offset}, {"dtype", "float32le"}});
    offset += values.size();
  }
  header["parameters"] = arrays;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(kMagic, static_cast<std::streamsize>(kMagicLen));
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, values] : ckpt.parameters) {
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(float)));
  }
  if (!out) throw IoError("short write on checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  char magic[kMagicLen];
  in.read(magic, kMagicLen);
  if (!in || std::memcmp(magic, kMagic, kMagicLen) != 0) throw ParseError(path.string() + " is not a featlock checkpoint");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len > (1u << 26)) throw ParseError("corrupt checkpoint header length in " + path.string());
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw ParseError("truncated checkpoint header in " + path.string());

  Checkpoint c;
  Json header;
  try {
    header = Json::parse(text);
    c.config = detector_config_from_json(header.at("config"));
    c.model_seed = header.at("model_seed").get<std::uint64_t>();
    c.train_seed = header.at("train_seed").get<std::uint64_t>();
    c.iterations = header.at("iterations").get<std::size_t>();
    c.key_fingerprint = header.at("key_fingerprint").get<std::string>();
    if (!header.at("experiment").is_null()) c.experiment = header["experiment"].dump();
    for (const auto& a : header.at("parameters")) {
      std::vector<float> values(a.at("count").get<std::size_t>());
      in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(float)));
      if (!in) throw ParseError("truncated parameter data in " + path.string());
      c.parameters.emplace_back(a.at("name").get<std::string>(), std::move(values));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("checkpoint header: " + std::string(e.what()));
  }
  return c;
}

}  // namespace featlock
