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
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "synthvae/image.hpp"
#include "synthvae/render.hpp"
#include "synthvae/schema.hpp"

namespace synthvae {

/// What the rows of a manifest mean.
///   dataset   independent samples
///   pairs     rows 2k and 2k+1 are (positive, negative) of pair k
///   sequence  rows are frames in temporal order
enum class ManifestKind { kDataset, kPairs, kSequence };

struct ManifestRecord {
  std::string image_path;             // relative to the manifest directory
  std::optional<AttrVector> attrs;    // attribute units; absent for real corpora

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

/// Optional crop applied to every image at load time (centering/size
/// alignment for external corpora). Image dims in the manifest are post-crop.
struct CropBox {
  int y = 0, x = 0, height = 0, width = 0;
  friend bool operator==(const CropBox&, const CropBox&) = default;
};

struct DatasetManifest {
  ManifestKind kind = ManifestKind::kDataset;
  std::string schema_version;
  ImageDims image_dims;
  std::string renderer_version;  // empty for external corpora
  std::optional<CropBox> crop;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<ManifestRecord> records;

  /// Directory the relative image paths resolve against. Not serialized.
  std::string root;

  std::string resolve(const ManifestRecord& r) const;
  bool fully_labeled() const;

  void save(const std::string& path) const;
  /// Parses without touching images.
  static DatasetManifest load(const std::string& path);

  /// Equality of the serialized content (root excluded).
  bool same_content(const DatasetManifest& other) const;
};

/// Pairwise attribute correlation imposed by the toy "real" domain sampler.
struct AttributeCorrelation {
  std::string a, b;
  double rho = 0.0;
};

/// Sampling and appearance of a rendered domain. The default is the clean,
/// whitened synthetic domain.
struct DomainSpec {
  std::vector<AttributeCorrelation> correlations;
  DomainShift shift{0.0, 0, 0};

  bool whitened() const { return correlations.empty(); }

  /// Twin "real" domain used by the desk-scale experiments.
  static DomainSpec toy_real(const AttributeSchema& schema);

  nlohmann::json to_json() const;
  static DomainSpec from_json(const nlohmann::json& doc);
};

/// Gaussian-copula sampler: correlated normals mapped through the normal CDF
/// onto each attribute's range (binary attributes threshold at the median).
/// With no correlations it reduces to an independent uniform sampler, but
/// `sample_whitened` is the canonical path for synthetic corpora.
std::vector<AttrVector> sample_correlated(const AttributeSchema& schema,
                                          const std::vector<AttributeCorrelation>& correlations,
                                          std::size_t count, std::uint64_t seed);

/// Samples for a domain: whitened for the synthetic domain, copula otherwise.
std::vector<AttrVector> sample_domain(const AttributeSchema& schema, const DomainSpec& domain,
                                      std::size_t count, std::uint64_t seed);

Image render_in_domain(std::span<const double> z, const AttributeSchema& schema, ImageDims dims,
                       const DomainSpec& domain);

/// Images held as 8-bit levels, N x H x W x C, plus optional labels.
struct Corpus {
  ImageDims dims;
  std::vector<std::uint8_t> pixels;
  std::vector<AttrVector> labels;  // empty, or one per image

  std::size_t size() const { return dims.count() ? pixels.size() / dims.count() : 0; }
  Image image(std::size_t i) const;
  void push_back(const Image& img, std::optional<AttrVector> label = std::nullopt);
};

/// Renders `count` samples without touching disk. Identical, byte for byte,
/// to the images `build_dataset` writes for the same arguments.
Corpus render_corpus(const AttributeSchema& schema, const DomainSpec& domain, std::size_t count,
                     std::uint64_t seed, ImageDims dims);

struct BuildOptions {
  ImageDims dims{80, 64, 3};
  DomainSpec domain;
  bool write_labels = true;  // false produces an unlabeled "real" corpus
};

/// Samples, renders and writes images plus `manifest.jsonl` under `out_dir`.
/// Row order equals sample order.
DatasetManifest build_dataset(const AttributeSchema& schema, std::size_t count,
                              std::uint64_t seed, const std::string& out_dir,
                              const BuildOptions& options = {});

/// `count` pairs differing only in `flip` (hi for the positive, lo for the
/// negative); all other attributes come from the domain sampler.
DatasetManifest build_pairs(const AttributeSchema& schema, const std::string& flip,
                            std::size_t count, std::uint64_t seed, const std::string& out_dir,
                            const BuildOptions& options = {});

struct SequenceOptions {
  std::size_t frames = 71;
  std::string vary = "sm";
  double cycles = 1.5;    // full oscillations of the varying attribute
  double jitter = 0.06;   // per-frame independent jitter of the others, fraction of range
};

/// Frames of one subject: `vary` oscillates smoothly over its range while the
/// other attributes hold a domain-sampled base value plus small independent
/// per-frame jitter.
std::vector<AttrVector> sequence_attributes(const AttributeSchema& schema,
                                            const DomainSpec& domain,
                                            const SequenceOptions& seq, std::uint64_t seed);

DatasetManifest build_sequence(const AttributeSchema& schema, const SequenceOptions& seq,
                               std::uint64_t seed, const std::string& out_dir,
                               const BuildOptions& options = {});

/// Loads and validates an external (or previously built) manifest: uniform
/// dims, readable images, labels inside the schema ranges. Unlabeled rows are
/// accepted. Errors name the offending row.
DatasetManifest ingest_external(const std::string& manifest_path, const AttributeSchema& schema);

/// Reads every image of a manifest into memory (applying the crop).
Corpus load_corpus(const DatasetManifest& manifest);

Image load_image(const DatasetManifest& manifest, const ManifestRecord& record);

std::string to_string(ManifestKind kind);
ManifestKind manifest_kind_from_string(const std::string& s);

}  // namespace synthvae
