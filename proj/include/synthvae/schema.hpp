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

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace synthvae {

enum class AttributeKind { kContinuous, kBinary };

struct AttributeSpec {
  std::string name;
  std::string short_code;
  double lo = 0.0;
  double hi = 1.0;
  AttributeKind kind = AttributeKind::kContinuous;

  double midpoint() const { return 0.5 * (lo + hi); }
  double span() const { return hi - lo; }

  friend bool operator==(const AttributeSpec&, const AttributeSpec&) = default;
};

/// Attribute values in attribute units, one per schema entry. Index l of every
/// code vector refers to the schema order.
using AttrVector = std::vector<double>;

/// Ordered attribute vocabulary. The order is part of the versioned contract:
/// changing it changes the meaning of every trained code.
class AttributeSchema {
 public:
  AttributeSchema() = default;
  AttributeSchema(std::string version, std::vector<AttributeSpec> attributes)
      : version_(std::move(version)), attributes_(std::move(attributes)) {}

  const std::string& version() const { return version_; }
  const std::vector<AttributeSpec>& attributes() const { return attributes_; }
  const AttributeSpec& operator[](std::size_t l) const { return attributes_[l]; }
  std::size_t size() const { return attributes_.size(); }
  bool empty() const { return attributes_.empty(); }

  /// Index of an attribute by name or short code.
  std::optional<std::size_t> find(std::string_view name_or_code) const;
  std::size_t index_of(std::string_view name_or_code) const;

  /// Sub-schema holding the named attributes in the given order.
  AttributeSchema subset(std::span<const std::string> codes, std::string version) const;

  AttrVector midpoint() const;

  nlohmann::json to_json() const;
  static AttributeSchema from_json(const nlohmann::json& doc);
  static AttributeSchema load(const std::string& path);
  void save(const std::string& path) const;

  friend bool operator==(const AttributeSchema&, const AttributeSchema&) = default;

 private:
  std::string version_;
  std::vector<AttributeSpec> attributes_;
};

/// The 17 face attributes: y p j l a be m ba sm bR bG bB hs br hR hG hB.
AttributeSchema default_schema();

/// Eight-attribute subset used for 32x32 toy corpora.
AttributeSchema toy_schema();

/// Resolves "default", "toy" or a path to a schema file.
AttributeSchema resolve_schema(const std::string& name_or_path);

/// Empty result means the schema is valid.
std::vector<std::string> validate_schema(const AttributeSchema& schema);

/// Throws SchemaError listing every violation.
void require_valid(const AttributeSchema& schema);

/// Whitened, mutually independent draws: continuous attributes uniform on
/// [lo, hi], binary attributes a fair coin over {lo, hi}.
std::vector<AttrVector> sample_whitened(const AttributeSchema& schema, std::size_t count,
                                        std::uint64_t seed);

/// Per-attribute affine map lo -> -1, hi -> +1. Degenerate ranges map to 0.
std::vector<double> to_code(std::span<const double> values, const AttributeSchema& schema);
AttrVector from_code(std::span<const double> code, const AttributeSchema& schema);

/// Throws RangeError naming the first component outside its range.
void check_in_range(std::span<const double> values, const AttributeSchema& schema,
                    double tolerance = 1e-9);

}  // namespace synthvae
