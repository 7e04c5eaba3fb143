// Copyright 2026 The synthvae Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "synthvae/schema.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "synthvae/errors.hpp"
#include "synthvae/rng.hpp"

namespace synthvae {

namespace {

AttributeSpec continuous(std::string name, std::string code, double lo, double hi) {
  return {std::move(name), std::move(code), lo, hi, AttributeKind::kContinuous};
}

AttributeSpec binary(std::string name, std::string code) {
  return {std::move(name), std::move(code), 0.0, 1.0, AttributeKind::kBinary};
}

const char* kind_name(AttributeKind kind) {
  return kind == AttributeKind::kBinary ? "binary" : "continuous";
}

}  // namespace

std::optional<std::size_t> AttributeSchema::find(std::string_view name_or_code) const {
  for (std::size_t l = 0; l < attributes_.size(); ++l) {
    if (attributes_[l].short_code == name_or_code) return l;
  }
  for (std::size_t l = 0; l < attributes_.size(); ++l) {
    if (attributes_[l].name == name_or_code) return l;
  }
  return std::nullopt;
}

std::size_t AttributeSchema::index_of(std::string_view name_or_code) const {
  auto l = find(name_or_code);
  if (!l) throw SchemaError("unknown attribute '" + std::string(name_or_code) + "'");
  return *l;
}

AttributeSchema AttributeSchema::subset(std::span<const std::string> codes,
                                        std::string version) const {
  std::vector<AttributeSpec> picked;
  picked.reserve(codes.size());
  for (const auto& c : codes) picked.push_back(attributes_[index_of(c)]);
  return {std::move(version), std::move(picked)};
}

AttrVector AttributeSchema::midpoint() const {
  AttrVector v(attributes_.size());
  for (std::size_t l = 0; l < v.size(); ++l) v[l] = attributes_[l].midpoint();
  return v;
}

nlohmann::json AttributeSchema::to_json() const {
  nlohmann::json attrs = nlohmann::json::array();
  for (const auto& a : attributes_) {
    attrs.push_back({{"name", a.name},
                     {"short_code", a.short_code},
                     {"lo", a.lo},
                     {"hi", a.hi},
                     {"kind", kind_name(a.kind)}});
  }
  return {{"version", version_}, {"attributes", attrs}};
}

AttributeSchema AttributeSchema::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw SchemaError("schema document must be an object");
  if (!doc.contains("version") || !doc["version"].is_string())
    throw SchemaError("schema: missing string field 'version'");
  if (!doc.contains("attributes") || !doc["attributes"].is_array())
    throw SchemaError("schema: missing array field 'attributes'");
  std::vector<AttributeSpec> attrs;
  for (std::size_t i = 0; i < doc["attributes"].size(); ++i) {
    const auto& a = doc["attributes"][i];
    const std::string where = "schema.attributes[" + std::to_string(i) + "]";
    try {
      AttributeSpec spec;
      spec.name = a.at("name").get<std::string>();
      spec.short_code = a.at("short_code").get<std::string>();
      spec.lo = a.at("lo").get<double>();
      spec.hi = a.at("hi").get<double>();
      const auto kind = a.value("kind", std::string("continuous"));
      if (kind == "binary") {
        spec.kind = AttributeKind::kBinary;
      } else if (kind == "continuous") {
        spec.kind = AttributeKind::kContinuous;
      } else {
        throw SchemaError(where + ".kind: unknown kind '" + kind + "'");
      }
      attrs.push_back(std::move(spec));
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(where + ": " + e.what());
    }
  }
  return {doc["version"].get<std::string>(), std::move(attrs)};
}

AttributeSchema AttributeSchema::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open schema file");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path, e.what());
  }
  return from_json(doc);
}

void AttributeSchema::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot write schema file");
  out << to_json().dump(2) << '\n';
}

AttributeSchema default_schema() {
  return {"faces-17/v1",
          {continuous("yaw", "y", -30.0, 30.0), continuous("pitch", "p", -20.0, 20.0),
           continuous("jaw", "j", 0.0, 1.0), continuous("lip", "l", 0.0, 1.0),
           continuous("age", "a", 20.0, 80.0), binary("beard", "be"), binary("mustache", "m"),
           binary("bald", "ba"), continuous("smiling", "sm", 0.0, 1.0),
           continuous("background-R", "bR", 0.0, 1.0),
           continuous("background-G", "bG", 0.0, 1.0),
           continuous("background-B", "bB", 0.0, 1.0),
           continuous("head width", "hs", 0.8, 1.2), continuous("brightness", "br", 0.6, 1.0),
           continuous("hue-R", "hR", 0.8, 1.2), continuous("hue-G", "hG", 0.8, 1.2),
           continuous("hue-B", "hB", 0.8, 1.2)}};
}

AttributeSchema toy_schema() {
  const std::vector<std::string> codes{"y", "p", "j", "sm", "m", "bR", "hs", "br"};
  return default_schema().subset(codes, "toy-8/v1");
}

AttributeSchema resolve_schema(const std::string& name_or_path) {
  if (name_or_path.empty() || name_or_path == "default") return default_schema();
  if (name_or_path == "toy") return toy_schema();
  return AttributeSchema::load(name_or_path);
}

std::vector<std::string> validate_schema(const AttributeSchema& schema) {
  std::vector<std::string> problems;
  if (schema.version().empty()) problems.push_back("version is empty");
  if (schema.empty()) problems.push_back("schema has no attributes");
  std::set<std::string> names;
  std::set<std::string> codes;
  for (std::size_t l = 0; l < schema.size(); ++l) {
    const auto& a = schema[l];
    const std::string where = "attribute " + std::to_string(l) + " ('" + a.name + "')";
    if (a.name.empty()) problems.push_back(where + ": empty name");
    if (a.short_code.empty()) problems.push_back(where + ": empty short_code");
    if (!names.insert(a.name).second) problems.push_back(where + ": duplicate name");
    if (!codes.insert(a.short_code).second)
      problems.push_back(where + ": duplicate short_code '" + a.short_code + "'");
    if (!std::isfinite(a.lo) || !std::isfinite(a.hi))
      problems.push_back(where + ": non-finite range");
    else if (a.lo > a.hi)
      problems.push_back(where + ": inverted range lo > hi");
  }
  return problems;
}

void require_valid(const AttributeSchema& schema) {
  auto problems = validate_schema(schema);
  if (problems.empty()) return;
  std::string msg = "invalid schema";
  for (const auto& p : problems) msg += "; " + p;
  throw SchemaError(msg);
}

std::vector<AttrVector> sample_whitened(const AttributeSchema& schema, std::size_t count,
                                        std::uint64_t seed) {
  require_valid(schema);
  Rng rng(seed);
  std::vector<AttrVector> out(count, AttrVector(schema.size()));
  for (auto& v : out) {
    for (std::size_t l = 0; l < schema.size(); ++l) {
      const auto& a = schema[l];
      if (a.kind == AttributeKind::kBinary) {
        v[l] = rng.coin() ? a.hi : a.lo;
      } else {
        // Draw first so the stream position does not depend on the range.
        const double u = rng.uniform();
        v[l] = a.lo == a.hi ? a.lo : a.lo + (a.hi - a.lo) * u;
      }
    }
  }
  return out;
}

void check_in_range(std::span<const double> values, const AttributeSchema& schema,
                    double tolerance) {
  if (values.size() != schema.size())
    throw RangeError("attribute vector has " + std::to_string(values.size()) +
                     " components, schema has " + std::to_string(schema.size()));
  for (std::size_t l = 0; l < values.size(); ++l) {
    const auto& a = schema[l];
    const double slack = tolerance * std::max(1.0, a.span());
    if (!(values[l] >= a.lo - slack && values[l] <= a.hi + slack))
      throw RangeError("attribute '" + a.name + "' = " + std::to_string(values[l]) +
                       " outside [" + std::to_string(a.lo) + ", " + std::to_string(a.hi) + "]");
  }
}

std::vector<double> to_code(std::span<const double> values, const AttributeSchema& schema) {
  check_in_range(values, schema);
  std::vector<double> code(values.size());
  for (std::size_t l = 0; l < values.size(); ++l) {
    const auto& a = schema[l];
    code[l] = a.span() > 0.0 ? (2.0 * (values[l] - a.lo) / a.span()) - 1.0 : 0.0;
  }
  return code;
}

AttrVector from_code(std::span<const double> code, const AttributeSchema& schema) {
  if (code.size() != schema.size())
    throw RangeError("code has " + std::to_string(code.size()) + " components, schema has " +
                     std::to_string(schema.size()));
  AttrVector v(code.size());
  for (std::size_t l = 0; l < code.size(); ++l) {
    if (!(code[l] >= -1.0 - 1e-9 && code[l] <= 1.0 + 1e-9))
      throw RangeError("code component " + std::to_string(l) + " = " + std::to_string(code[l]) +
                       " outside [-1, 1]");
    const auto& a = schema[l];
    v[l] = a.lo + 0.5 * (code[l] + 1.0) * a.span();
  }
  return v;
}

}  // namespace synthvae
