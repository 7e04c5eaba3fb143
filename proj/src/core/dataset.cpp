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

#include "synthvae/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "synthvae/errors.hpp"
#include "synthvae/rng.hpp"

namespace synthvae {

namespace fs = std::filesystem;

namespace {

constexpr const char* kManifestFormat = "synthvae-manifest";
constexpr int kManifestFormatVersion = 1;

std::string image_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "images/%06zu.png", i);
  return buf;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "images", ec);
  if (ec) throw IoError(dir, "cannot create directory: " + ec.message());
}

void remove_stale_images(const std::string& dir) {
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(fs::path(dir) / "images", ec)) {
    if (entry.path().extension() == ".png") fs::remove(entry.path(), ec);
  }
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

DatasetManifest write_rendered(const AttributeSchema& schema, const std::vector<AttrVector>& attrs,
                               const std::string& out_dir, const BuildOptions& options,
                               ManifestKind kind, nlohmann::json meta) {
  ensure_dir(out_dir);
  remove_stale_images(out_dir);
  DatasetManifest manifest;
  manifest.kind = kind;
  manifest.schema_version = schema.version();
  manifest.image_dims = options.dims;
  manifest.renderer_version = std::string(kRendererVersion);
  manifest.meta = std::move(meta);
  manifest.meta["domain"] = options.domain.to_json();
  manifest.meta["schema"] = schema.to_json();
  manifest.root = out_dir;
  manifest.records.reserve(attrs.size());
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    const Image img = render_in_domain(attrs[i], schema, options.dims, options.domain);
    ManifestRecord rec{image_name(i), std::nullopt};
    if (options.write_labels) rec.attrs = attrs[i];
    write_png((fs::path(out_dir) / rec.image_path).string(), img);
    manifest.records.push_back(std::move(rec));
  }
  manifest.save((fs::path(out_dir) / "manifest.jsonl").string());
  return manifest;
}

}  // namespace

std::string to_string(ManifestKind kind) {
  switch (kind) {
    case ManifestKind::kPairs:
      return "pairs";
    case ManifestKind::kSequence:
      return "sequence";
    case ManifestKind::kDataset:
      break;
  }
  return "dataset";
}

ManifestKind manifest_kind_from_string(const std::string& s) {
  if (s == "dataset") return ManifestKind::kDataset;
  if (s == "pairs") return ManifestKind::kPairs;
  if (s == "sequence") return ManifestKind::kSequence;
  throw Error("unknown manifest kind '" + s + "'");
}

std::string DatasetManifest::resolve(const ManifestRecord& r) const {
  const fs::path p(r.image_path);
  if (p.is_absolute() || root.empty()) return p.string();
  return (fs::path(root) / p).string();
}

bool DatasetManifest::fully_labeled() const {
  return std::all_of(records.begin(), records.end(),
                     [](const ManifestRecord& r) { return r.attrs.has_value(); });
}

void DatasetManifest::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot write manifest");
  nlohmann::json header{{"format", kManifestFormat},
                        {"format_version", kManifestFormatVersion},
                        {"kind", to_string(kind)},
                        {"schema_version", schema_version},
                        {"image_dims", image_dims.str()},
                        {"renderer_version", renderer_version},
                        {"count", records.size()},
                        {"meta", meta}};
  if (crop) header["crop"] = {crop->y, crop->x, crop->height, crop->width};
  out << header.dump() << '\n';
  for (const auto& r : records) {
    nlohmann::json row{{"image", r.image_path}};
    row["attrs"] = r.attrs ? nlohmann::json(*r.attrs) : nlohmann::json(nullptr);
    out << row.dump() << '\n';
  }
  if (!out) throw IoError(path, "write failed");
}

DatasetManifest DatasetManifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open manifest");
  DatasetManifest m;
  m.root = fs::path(path).parent_path().string();
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!have_header) {
      have_header = true;
      if (doc.value("format", "") != kManifestFormat)
        throw IoError(path, "line 1: not a synthvae manifest header");
      try {
        m.kind = manifest_kind_from_string(doc.value("kind", "dataset"));
        m.schema_version = doc.value("schema_version", "");
        m.image_dims = ImageDims::parse(doc.at("image_dims").get<std::string>());
        m.renderer_version = doc.value("renderer_version", "");
        if (doc.contains("meta")) m.meta = doc["meta"];
        if (doc.contains("crop")) {
          const auto& c = doc["crop"];
          m.crop = CropBox{c.at(0).get<int>(), c.at(1).get<int>(), c.at(2).get<int>(),
                           c.at(3).get<int>()};
        }
      } catch (const std::exception& e) {
        throw IoError(path, std::string("header: ") + e.what());
      }
      continue;
    }
    ManifestRecord r;
    try {
      r.image_path = doc.at("image").get<std::string>();
      if (doc.contains("attrs") && !doc["attrs"].is_null())
        r.attrs = doc["attrs"].get<AttrVector>();
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path, "row " + std::to_string(m.records.size()) + ": " + e.what());
    }
    m.records.push_back(std::move(r));
  }
  if (!have_header) throw IoError(path, "empty manifest");
  return m;
}

bool DatasetManifest::same_content(const DatasetManifest& o) const {
  return kind == o.kind && schema_version == o.schema_version && image_dims == o.image_dims &&
         renderer_version == o.renderer_version && crop == o.crop && meta == o.meta &&
         records == o.records;
}

DomainSpec DomainSpec::toy_real(const AttributeSchema& schema) {
  DomainSpec d;
  d.shift = DomainShift{};
  const std::vector<AttributeCorrelation> candidates{
      {"sm", "j", 0.7}, {"be", "m", 0.7}, {"bR", "br", 0.6}, {"y", "hs", 0.5},
      {"m", "p", 0.4},  {"bR", "bG", 0.5}, {"l", "a", -0.4}};
  for (const auto& c : candidates) {
    if (schema.find(c.a) && schema.find(c.b)) d.correlations.push_back(c);
  }
  return d;
}

nlohmann::json DomainSpec::to_json() const {
  nlohmann::json corr = nlohmann::json::array();
  for (const auto& c : correlations) corr.push_back({c.a, c.b, c.rho});
  return {{"correlations", corr},
          {"shift",
           {{"texture_amplitude", shift.texture_amplitude},
            {"texture_seed", shift.texture_seed},
            {"blur_passes", shift.blur_passes}}}};
}

DomainSpec DomainSpec::from_json(const nlohmann::json& doc) {
  DomainSpec d;
  if (doc.contains("correlations")) {
    for (const auto& c : doc["correlations"])
      d.correlations.push_back({c.at(0).get<std::string>(), c.at(1).get<std::string>(),
                                c.at(2).get<double>()});
  }
  if (doc.contains("shift")) {
    const auto& s = doc["shift"];
    d.shift.texture_amplitude = s.value("texture_amplitude", 0.0);
    d.shift.texture_seed = s.value("texture_seed", 0);
    d.shift.blur_passes = s.value("blur_passes", 0);
  }
  return d;
}

std::vector<AttrVector> sample_correlated(const AttributeSchema& schema,
                                          const std::vector<AttributeCorrelation>& correlations,
                                          std::size_t count, std::uint64_t seed) {
  require_valid(schema);
  const auto n = static_cast<Eigen::Index>(schema.size());
  Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(n, n);
  for (const auto& c : correlations) {
    const auto a = static_cast<Eigen::Index>(schema.index_of(c.a));
    const auto b = static_cast<Eigen::Index>(schema.index_of(c.b));
    if (a == b || std::abs(c.rho) >= 1.0)
      throw SchemaError("bad correlation " + c.a + "/" + c.b);
    corr(a, b) = corr(b, a) = c.rho;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(corr);
  if (llt.info() != Eigen::Success)
    throw SchemaError("attribute correlation matrix is not positive definite");
  const Eigen::MatrixXd chol = llt.matrixL();

  Rng rng(seed);
  std::vector<AttrVector> out(count, AttrVector(schema.size()));
  Eigen::VectorXd g(n);
  for (auto& v : out) {
    for (Eigen::Index l = 0; l < n; ++l) g(l) = rng.normal();
    const Eigen::VectorXd x = chol * g;
    for (Eigen::Index l = 0; l < n; ++l) {
      const auto& a = schema[static_cast<std::size_t>(l)];
      const double u = normal_cdf(x(l));
      if (a.kind == AttributeKind::kBinary)
        v[l] = u >= 0.5 ? a.hi : a.lo;
      else
        v[l] = std::clamp(a.lo + u * a.span(), a.lo, a.hi);
    }
  }
  return out;
}

std::vector<AttrVector> sample_domain(const AttributeSchema& schema, const DomainSpec& domain,
                                      std::size_t count, std::uint64_t seed) {
  if (domain.whitened()) return sample_whitened(schema, count, seed);
  return sample_correlated(schema, domain.correlations, count, seed);
}

Image render_in_domain(std::span<const double> z, const AttributeSchema& schema, ImageDims dims,
                       const DomainSpec& domain) {
  Image img = render(z, schema, dims);
  if (!domain.shift.identity()) img = apply_domain_shift(img, domain.shift);
  return img;
}

Image Corpus::image(std::size_t i) const {
  const std::size_t n = dims.count();
  return from_bytes(std::span<const std::uint8_t>(pixels.data() + i * n, n), dims);
}

void Corpus::push_back(const Image& img, std::optional<AttrVector> label) {
  if (img.dims != dims) throw ShapeError("corpus image dims " + img.dims.str() + " != " + dims.str());
  const auto bytes = to_bytes(img);
  pixels.insert(pixels.end(), bytes.begin(), bytes.end());
  if (label) labels.push_back(std::move(*label));
}

Corpus render_corpus(const AttributeSchema& schema, const DomainSpec& domain, std::size_t count,
                     std::uint64_t seed, ImageDims dims) {
  const auto attrs = sample_domain(schema, domain, count, seed);
  Corpus corpus;
  corpus.dims = dims;
  corpus.pixels.reserve(count * dims.count());
  for (const auto& z : attrs) corpus.push_back(render_in_domain(z, schema, dims, domain), z);
  return corpus;
}

DatasetManifest build_dataset(const AttributeSchema& schema, std::size_t count,
                              std::uint64_t seed, const std::string& out_dir,
                              const BuildOptions& options) {
  const auto attrs = sample_domain(schema, options.domain, count, seed);
  return write_rendered(schema, attrs, out_dir, options, ManifestKind::kDataset,
                        {{"seed", seed}});
}

DatasetManifest build_pairs(const AttributeSchema& schema, const std::string& flip,
                            std::size_t count, std::uint64_t seed, const std::string& out_dir,
                            const BuildOptions& options) {
  const std::size_t l = schema.index_of(flip);
  const auto base = sample_domain(schema, options.domain, count, seed);
  std::vector<AttrVector> attrs;
  attrs.reserve(2 * count);
  for (const auto& b : base) {
    AttrVector pos = b, neg = b;
    pos[l] = schema[l].hi;
    neg[l] = schema[l].lo;
    attrs.push_back(std::move(pos));
    attrs.push_back(std::move(neg));
  }
  return write_rendered(schema, attrs, out_dir, options, ManifestKind::kPairs,
                        {{"seed", seed}, {"flip_attribute", schema[l].short_code}});
}

std::vector<AttrVector> sequence_attributes(const AttributeSchema& schema,
                                            const DomainSpec& domain,
                                            const SequenceOptions& seq, std::uint64_t seed) {
  const std::size_t vary = schema.index_of(seq.vary);
  const AttrVector base = sample_domain(schema, domain, 1, seed).front();
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<AttrVector> frames(seq.frames, base);
  for (std::size_t f = 0; f < seq.frames; ++f) {
    const double t = seq.frames > 1 ? static_cast<double>(f) / (seq.frames - 1) : 0.0;
    for (std::size_t l = 0; l < schema.size(); ++l) {
      const auto& a = schema[l];
      if (l == vary) {
        frames[f][l] = a.lo + a.span() * (0.5 - 0.5 * std::cos(2.0 * M_PI * seq.cycles * t));
      } else if (a.kind == AttributeKind::kContinuous) {
        const double j = rng.uniform(-1.0, 1.0) * seq.jitter * a.span();
        frames[f][l] = std::clamp(base[l] + j, a.lo, a.hi);
      }
    }
  }
  return frames;
}

DatasetManifest build_sequence(const AttributeSchema& schema, const SequenceOptions& seq,
                               std::uint64_t seed, const std::string& out_dir,
                               const BuildOptions& options) {
  const auto attrs = sequence_attributes(schema, options.domain, seq, seed);
  return write_rendered(schema, attrs, out_dir, options, ManifestKind::kSequence,
                        {{"seed", seed},
                         {"vary_attribute", schema[schema.index_of(seq.vary)].short_code},
                         {"cycles", seq.cycles},
                         {"jitter", seq.jitter}});
}

Image load_image(const DatasetManifest& manifest, const ManifestRecord& record) {
  const std::string path = manifest.resolve(record);
  Image img = read_png(path);
  if (manifest.crop) {
    const auto& c = *manifest.crop;
    if (c.y < 0 || c.x < 0 || c.y + c.height > img.dims.height || c.x + c.width > img.dims.width)
      throw IoError(path, "crop box exceeds image " + img.dims.str());
    Image out(ImageDims{c.height, c.width, img.dims.channels});
    for (int y = 0; y < c.height; ++y)
      for (int x = 0; x < c.width; ++x)
        for (int k = 0; k < img.dims.channels; ++k) out.at(y, x, k) = img.at(c.y + y, c.x + x, k);
    img = std::move(out);
  }
  return img;
}

DatasetManifest ingest_external(const std::string& manifest_path, const AttributeSchema& schema) {
  require_valid(schema);
  DatasetManifest m = DatasetManifest::load(manifest_path);
  if (!m.schema_version.empty() && m.fully_labeled() && !m.records.empty() &&
      m.schema_version != schema.version())
    throw SchemaError(manifest_path + ": manifest schema '" + m.schema_version +
                      "' does not match '" + schema.version() + "'");
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    const auto& r = m.records[i];
    const std::string where = manifest_path + ": row " + std::to_string(i) + " (" + r.image_path + ")";
    if (r.attrs) {
      try {
        check_in_range(*r.attrs, schema);
      } catch (const RangeError& e) {
        throw RangeError(where + ": label out of range: " + e.what());
      }
    }
    Image img;
    try {
      img = load_image(m, r);
    } catch (const IoError& e) {
      throw IoError(m.resolve(r), "row " + std::to_string(i) + ": unreadable image: " + e.what());
    }
    if (img.dims != m.image_dims)
      throw ShapeError(where + ": image dims " + img.dims.str() + " != manifest dims " +
                       m.image_dims.str());
  }
  return m;
}

Corpus load_corpus(const DatasetManifest& manifest) {
  Corpus corpus;
  corpus.dims = manifest.image_dims;
  corpus.pixels.reserve(manifest.records.size() * corpus.dims.count());
  const bool labeled = manifest.fully_labeled();
  for (const auto& r : manifest.records) {
    corpus.push_back(load_image(manifest, r), labeled ? r.attrs : std::nullopt);
  }
  return corpus;
}

}  // namespace synthvae
