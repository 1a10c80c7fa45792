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

#include "featlock/voc.hpp"

#include <algorithm>
#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <cmath>
#include <fstream>
#include <sstream>

#include "featlock/errors.hpp"
#include "featlock/image_io.hpp"
#include "json.hpp"

namespace featlock {
namespace pt = boost::property_tree;

namespace {

template <typename T>
T required(const pt::ptree& node, const std::string& path, const std::string& context) {
  auto child = node.get_optional<std::string>(path);
  if (!child) throw SchemaError(context + ": missing <" + path + ">");
  std::istringstream is(*child);
  T value{};
  if (!(is >> value)) throw SchemaError(context + ": <" + path + "> is not numeric: '" + *child + "'");
  return value;
}

std::string format_number(double v) {
  if (v == std::floor(v)) return std::to_string(static_cast<long long>(v));
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

VocRecord parse_voc_annotation(const std::string& xml_text) {
  pt::ptree tree;
  try {
    std::istringstream is(xml_text);
    pt::read_xml(is, tree);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError("malformed VOC XML: " + e.message(), static_cast<int>(e.line()));
  }
  auto root = tree.get_child_optional("annotation");
  if (!root) throw SchemaError("VOC XML lacks an <annotation> root");

  VocRecord rec;
  rec.filename = root->get<std::string>("filename", "");
  rec.width = required<int>(*root, "size.width", "annotation");
  rec.height = required<int>(*root, "size.height", "annotation");
  rec.depth = root->get<int>("size.depth", 3);
  if (rec.width <= 0 || rec.height <= 0) throw SchemaError("annotation: image size must be positive");

  int index = 0;
  for (const auto& [tag, node] : *root) {
    if (tag != "object") continue;
    const std::string ctx = "object " + std::to_string(index++);
    VocObject obj;
    obj.name = node.get<std::string>("name", "");
    if (obj.name.empty()) throw SchemaError(ctx + ": missing <name>");
    obj.difficult = node.get<int>("difficult", 0) != 0;
    if (!node.get_child_optional("bndbox")) throw SchemaError(ctx + ": missing <bndbox>");
    obj.xmin = required<double>(node, "bndbox.xmin", ctx);
    obj.ymin = required<double>(node, "bndbox.ymin", ctx);
    obj.xmax = required<double>(node, "bndbox.xmax", ctx);
    obj.ymax = required<double>(node, "bndbox.ymax", ctx);
    if (!(obj.xmin >= 1 && obj.xmin < obj.xmax && obj.xmax <= rec.width && obj.ymin >= 1 &&
          obj.ymin < obj.ymax && obj.ymax <= rec.height)) {
      throw SchemaError(ctx + ": bndbox outside 1 <= min < max <= size");
    }
    rec.objects.push_back(std::move(obj));
  }
  return rec;
}

std::string format_voc_annotation(const VocRecord& record) {
  std::ostringstream os;
  os << "<annotation>\n"
     << "  <filename>" << record.filename << "</filename>\n"
     << "  <size>\n"
     << "    <width>" << record.width << "</width>\n"
     << "    <height>" << record.height << "</height>\n"
     << "    <depth>" << record.depth << "</depth>\n"
     << "  </size>\n";
  for (const auto& o : record.objects) {
    os << "  <object>\n"
       << "    <name>" << o.name << "</name>\n"
       << "    <difficult>" << (o.difficult ? 1 : 0) << "</difficult>\n"
       << "    <bndbox>\n"
       << "      <xmin>" << format_number(o.xmin) << "</xmin>\n"
       << "      <ymin>" << format_number(o.ymin) << "</ymin>\n"
       << "      <xmax>" << format_number(o.xmax) << "</xmax>\n"
       << "      <ymax>" << format_number(o.ymax) << "</ymax>\n"
       << "    </bndbox>\n"
       << "  </object>\n";
  }
  os << "</annotation>\n";
  return os.str();
}

VocRecord to_voc_record(const Sample& sample, const std::vector<std::string>& class_names,
                        const std::string& filename) {
  VocRecord rec;
  rec.filename = filename;
  rec.width = static_cast<int>(sample.image.width());
  rec.height = static_cast<int>(sample.image.height());
  rec.depth = static_cast<int>(sample.image.channels());
  for (const auto& o : sample.objects) {
    if (o.label < 0 || static_cast<std::size_t>(o.label) >= class_names.size()) {
      throw SchemaError("sample " + sample.id + " has label outside the class list");
    }
    rec.objects.push_back({class_names[static_cast<std::size_t>(o.label)],
                           std::round(o.box.xmin * rec.width) + 1, std::round(o.box.ymin * rec.height) + 1,
                           std::round(o.box.xmax * rec.width), std::round(o.box.ymax * rec.height),
                           o.difficult});
  }
  return rec;
}

std::vector<Object> objects_from_voc(const VocRecord& record, const std::vector<std::string>& class_names) {
  std::vector<Object> out;
  for (const auto& o : record.objects) {
    const auto it = std::find(class_names.begin(), class_names.end(), o.name);
    if (it == class_names.end()) throw SchemaError("unknown class '" + o.name + "' in " + record.filename);
    const double W = record.width, H = record.height;
    out.push_back({{(o.xmin - 1) / W, (o.ymin - 1) / H, o.xmax / W, o.ymax / H},
                   static_cast<int>(it - class_names.begin()),
                   o.difficult});
  }
  return out;
}

DatasetManifest read_manifest(const std::filesystem::path& root) {
  std::ifstream in(root / "manifest.json");
  if (!in) throw IoError("cannot open " + (root / "manifest.json").string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("manifest.json: ") + e.what());
  }
  DatasetManifest m;
  try {
    m.class_names = j.at("classes").get<std::vector<std::string>>();
    m.splits = j.at("splits").get<std::map<std::string, std::vector<std::string>>>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("manifest.json: ") + e.what());
  }
  return m;
}

void write_dataset(const std::filesystem::path& root, const std::map<std::string, const Dataset*>& splits) {
  namespace fs = std::filesystem;
  fs::create_directories(root / "images");
  fs::create_directories(root / "annotations");
  nlohmann::json manifest;
  manifest["version"] = 1;
  std::vector<std::string> classes;
  for (const auto& [split, ds] : splits) {
    if (classes.empty()) classes = ds->class_names;
    if (ds->class_names != classes) throw SchemaError("splits disagree on class names");
    std::vector<std::string> ids;
    for (const auto& s : ds->samples) {
      const std::string id = split + "_" + s.id;
      write_png(root / "images" / (id + ".png"), s.image);
      std::ofstream xml(root / "annotations" / (id + ".xml"));
      if (!xml) throw IoError("cannot write annotation for " + id);
      xml << format_voc_annotation(to_voc_record(s, ds->class_names, id + ".png"));
      ids.push_back(id);
    }
    manifest["splits"][split] = ids;
  }
  manifest["classes"] = classes;
  std::ofstream out(root / "manifest.json");
  if (!out) throw IoError("cannot write manifest in " + root.string());
  out << manifest.dump(2) << "\n";
}

Dataset load_dataset(const std::filesystem::path& root, const std::string& split, std::size_t target) {
  const auto manifest = read_manifest(root);
  const auto it = manifest.splits.find(split);
  if (it == manifest.splits.end()) throw SchemaError("manifest has no split '" + split + "'");
  Dataset ds;
  ds.class_names = manifest.class_names;
  for (const auto& id : it->second) {
    std::ifstream xml(root / "annotations" / (id + ".xml"));
    if (!xml) throw IoError("missing annotation for " + id);
    std::stringstream text;
    text << xml.rdbuf();
    VocRecord rec;
    try {
      rec = parse_voc_annotation(text.str());
    } catch (const ParseError& e) {
      throw ParseError(id + ".xml: " + e.what());
    }
    Sample s;
    s.id = id;
    s.image = read_png(root / "images" / (id + ".png"));
    s.objects = objects_from_voc(rec, ds.class_names);
    ds.samples.push_back(target ? resize_and_normalize(s, target) : std::move(s));
  }
  return ds;
}

}  // namespace featlock
