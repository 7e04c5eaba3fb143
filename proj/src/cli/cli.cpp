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

#include "synthvae/cli/cli.hpp"

#include <pthread.h>
#include <signal.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "synthvae/dataset.hpp"
#include "synthvae/errors.hpp"
#include "synthvae/metrics.hpp"
#include "synthvae/nn/model.hpp"
#include "synthvae/nn/training.hpp"
#include "synthvae/service/service.hpp"

namespace synthvae::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// --- shared helpers ---------------------------------------------------------

struct Common {
  std::uint64_t seed = 0;
  std::string config;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool out_required = true) {
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--config", c.config, "Config document (path, or name under $SYNTHVAE_CONFIG_DIR)");
  auto* out = cmd->add_option("--out", c.out, "Output directory");
  if (out_required) out->required();
}

bool given(const CLI::App* cmd, const std::string& flag) { return cmd->count(flag) > 0; }

json read_json(const std::string& path, const std::string& field) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(field, path + ": malformed JSON: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot write");
  out << text;
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

fs::path prepare_out(const std::string& out) {
  fs::create_directories(out);
  return fs::path(out);
}

/// Applies keys of a generic option document to options not given on the
/// command line. Keys are long option names without the leading dashes.
void apply_option_config(CLI::App* cmd, const std::string& config) {
  if (config.empty()) return;
  const json doc = read_json(resolve_config_path(config), "config");
  if (!doc.is_object()) throw ConfigError("config", "expected a JSON object");
  for (const auto& [key, value] : doc.items()) {
    CLI::Option* opt = nullptr;
    try {
      opt = cmd->get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      throw ConfigError(key, "unknown option for '" + cmd->get_name() + "'");
    }
    if (opt->count() > 0 || key == "config" || key == "out") continue;
    std::vector<std::string> items;
    auto as_text = [&](const json& v) {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
      return v.dump();
    };
    if (value.is_array()) {
      for (const auto& v : value) items.push_back(as_text(v));
    } else {
      items.push_back(as_text(value));
    }
    try {
      for (const auto& item : items) opt->add_result(item);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw ConfigError(key, e.what());
    }
  }
}

nn::TrainConfig load_train_config(const std::string& config) {
  if (config.empty()) return {};
  const std::string path = resolve_config_path(config);
  std::ifstream probe(path);
  if (!probe) throw IoError(path, "cannot open config");
  return nn::TrainConfig::load(path);
}

DatasetManifest load_manifest(const std::string& path, const std::string& field) {
  if (path.empty()) throw ConfigError(field, "a manifest path is required");
  std::string file = path;
  if (fs::is_directory(file)) file = (fs::path(file) / "manifest.jsonl").string();
  return DatasetManifest::load(file);
}

AttributeSchema schema_of(const DatasetManifest& m, const std::string& override_name) {
  if (!override_name.empty()) {
    AttributeSchema s = resolve_schema(override_name);
    if (!m.schema_version.empty() && s.version() != m.schema_version)
      throw SchemaError("manifest schema '" + m.schema_version + "' differs from '" + s.version() + "'");
    return s;
  }
  if (m.meta.contains("schema")) return AttributeSchema::from_json(m.meta["schema"]);
  for (const auto& s : {default_schema(), toy_schema()}) {
    if (s.version() == m.schema_version) return s;
  }
  throw ConfigError("schema", "manifest does not embed its schema; pass --schema");
}

DomainSpec domain_of(const std::string& name, const AttributeSchema& schema) {
  if (name == "synth" || name.empty()) return {};
  if (name == "toy-real") return DomainSpec::toy_real(schema);
  return DomainSpec::from_json(read_json(name, "domain"));
}

std::vector<std::string> latent_names(const nn::ModelMeta& meta) {
  std::vector<std::string> names;
  for (int l = 0; l < meta.n_da; ++l) names.push_back(meta.schema[static_cast<std::size_t>(l)].short_code);
  const int n_r = meta.kind == nn::ModelKind::kSynthEncoder ? 0 : meta.n_r;
  for (int k = 0; k < n_r; ++k) names.push_back("r" + std::to_string(k));
  return names;
}

/// Latent by short code, name, "r<k>" or plain index.
std::size_t latent_index(const nn::ModelMeta& meta, const std::string& ref, const std::string& field) {
  const auto names = latent_names(meta);
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == ref) return i;
  }
  if (const auto idx = meta.schema.find(ref); idx && *idx < static_cast<std::size_t>(meta.n_da)) return *idx;
  if (!ref.empty() && ref.find_first_not_of("0123456789") == std::string::npos) {
    const auto i = std::stoul(ref);
    if (i < names.size()) return i;
  }
  throw ConfigError(field, "unknown latent '" + ref + "'");
}

std::map<std::size_t, double> parse_assignments(const nn::ModelMeta& meta,
                                                const std::vector<std::string>& items,
                                                const std::string& field) {
  std::map<std::size_t, double> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError(field, "expected NAME=VALUE, got '" + item + "'");
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError(field, "bad value in '" + item + "'");
    }
    out[latent_index(meta, item.substr(0, eq), field)] = v;
  }
  return out;
}

/// Which part of the code a metric reads: the domain-adapted latents when
/// the model has any, otherwise the whole code.
struct LatentView {
  EncodeFn encode;
  std::vector<std::string> names;
  std::string which;
};

LatentView latent_view(const nn::Model& model, const std::string& which) {
  const auto& meta = model.meta();
  std::string w = which;
  if (w == "auto") w = meta.n_da > 0 ? "da" : "code";
  auto names = latent_names(meta);
  if (w == "da") {
    if (meta.n_da == 0) throw ConfigError("latents", "model has no domain-adapted latents");
    names.resize(static_cast<std::size_t>(meta.n_da));
    return {model.da_encoder(), names, w};
  }
  if (w == "code") return {model.code_encoder(), names, w};
  throw ConfigError("latents", "expected auto, da or code");
}

std::vector<Image> manifest_images(const DatasetManifest& m) {
  std::vector<Image> out;
  out.reserve(m.records.size());
  for (const auto& r : m.records) out.push_back(load_image(m, r));
  return out;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

void write_resolved(const fs::path& dir, const std::string& command, const CLI::App* cmd,
                    json extra = json::object()) {
  json options = json::object();
  for (const CLI::Option* opt : cmd->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "help-all") continue;
    const auto& results = opt->results();
    if (results.empty()) {
      options[name] = opt->get_default_str();
    } else if (results.size() == 1) {
      options[name] = results.front();
    } else {
      options[name] = results;
    }
  }
  json doc{{"command", command}, {"options", options}};
  for (auto& [k, v] : extra.items()) doc[k] = v;
  write_json(dir / "resolved_config.json", doc);
}

// --- subcommands --------------------------------------------------------------

struct SynthGen {
  Common common;
  std::size_t count = 0;
  std::string kind = "dataset";
  std::string schema = "default";
  std::string dims = "80x64x3";
  std::string domain = "synth";
  std::string flip = "sm";
  std::string vary = "sm";
  std::size_t frames = 71;
  double cycles = 1.5;
  double jitter = 0.06;
  bool unlabeled = false;

  void attach(CLI::App* cmd) {
    add_common(cmd, common);
    cmd->add_option("--count", count, "Images (dataset) or pairs (pairs)");
    cmd->add_option("--kind", kind, "dataset | pairs | sequence")
        ->check(CLI::IsMember({"dataset", "pairs", "sequence"}));
    cmd->add_option("--schema", schema, "default | toy | schema file");
    cmd->add_option("--dims", dims, "HxWxC");
    cmd->add_option("--domain", domain, "synth | toy-real | domain file");
    cmd->add_option("--flip", flip, "Attribute flipped between pair members");
    cmd->add_option("--vary", vary, "Attribute varied along a sequence");
    cmd->add_option("--frames", frames, "Sequence length");
    cmd->add_option("--cycles", cycles, "Oscillations of the varied attribute");
    cmd->add_option("--jitter", jitter, "Per-frame jitter of the other attributes");
    cmd->add_flag("--unlabeled", unlabeled, "Omit attribute labels (external-style corpus)");
  }

  int run(CLI::App* cmd, std::ostream& out) {
    apply_option_config(cmd, common.config);
    const AttributeSchema s = resolve_schema(schema);
    BuildOptions opts;
    opts.dims = ImageDims::parse(dims);
    opts.domain = domain_of(domain, s);
    opts.write_labels = !unlabeled;
    const auto dir = prepare_out(common.out);
    DatasetManifest m;
    if (kind == "dataset") {
      if (count == 0) throw ConfigError("count", "must be positive");
      m = build_dataset(s, count, common.seed, dir.string(), opts);
    } else if (kind == "pairs") {
      if (count == 0) throw ConfigError("count", "must be positive");
      m = build_pairs(s, flip, count, common.seed, dir.string(), opts);
    } else {
      SequenceOptions seq;
      seq.frames = frames;
      seq.vary = vary;
      seq.cycles = cycles;
      seq.jitter = jitter;
      m = build_sequence(s, seq, common.seed, dir.string(), opts);
    }
    write_resolved(dir, "synth-gen", cmd, {{"schema", s.to_json()}, {"domain", opts.domain.to_json()}});
    out << "wrote " << m.records.size() << " images to " << (dir / "manifest.jsonl").string() << "\n";
    return kOk;
  }
};

struct TrainEncoder {
  Common common;
  std::string manifest;
  std::int64_t steps = 0;

  void attach(CLI::App* cmd) {
    add_common(cmd, common);
    cmd->add_option("--manifest", manifest, "Labeled synthetic dataset")->required();
    cmd->add_option("--steps", steps, "Override total_steps");
  }

  int run(CLI::App* cmd, std::ostream& out) {
    nn::TrainConfig c = load_train_config(common.config);
    if (given(cmd, "--seed")) c.seed = common.seed;
    if (steps > 0) c.total_steps = steps;
    c.validate();
    const DatasetManifest m = load_manifest(manifest, "manifest");
    const AttributeSchema s = schema_of(m, "");
    const auto dir = prepare_out(common.out);
    write_resolved(dir, "train-encoder", cmd, {{"train_config", c.to_json()}});
    fs::remove(dir / "metrics.jsonl");
    const Corpus corpus = load_corpus(m);
    const nn::Checkpoint ck = nn::train_synth_encoder(corpus, s, c, nn::jsonl_sink((dir / "metrics.jsonl").string()));
    ck.save((dir / "synth_encoder.pt").string());
    out << "trained synthetic encoder for " << c.total_steps << " steps: "
        << (dir / "synth_encoder.pt").string() << "\n";
    return kOk;
  }
};

struct TrainHybrid {
  Common common;
  std::string manifest;
  std::string encoder;
  std::string variant;
  std::string schema;
  std::int64_t steps = 0;

  void attach(CLI::App* cmd) {
    add_common(cmd, common);
    cmd->add_option("--manifest", manifest, "Real-domain dataset")->required();
    cmd->add_option("--encoder", encoder, "Synthetic encoder checkpoint (SYNTH variant)");
    cmd->add_option("--variant", variant, "SYNTH | UC | C (overrides the config)");
    cmd->add_option("--schema", schema, "Schema for UC/C when the manifest lacks one");
    cmd->add_option("--steps", steps, "Override total_steps");
  }

  int run(CLI::App* cmd, std::ostream& out) {
    nn::TrainConfig c = load_train_config(common.config);
    if (given(cmd, "--seed")) c.seed = common.seed;
    if (steps > 0) c.total_steps = steps;
    if (!variant.empty()) c.variant = nn::variant_from_string(variant);
    c.validate();
    const DatasetManifest m = load_manifest(manifest, "manifest");
    std::optional<nn::Checkpoint> es;
    AttributeSchema s;
    if (c.variant == nn::Variant::kSynth) {
      if (encoder.empty()) throw ConfigError("encoder", "SYNTH variant needs --encoder");
      es = nn::Checkpoint::load(encoder);
      s = es->meta.schema;
    } else {
      s = schema_of(m, schema);
    }
    const auto dir = prepare_out(common.out);
    write_resolved(dir, "train-hybrid", cmd, {{"train_config", c.to_json()}});
    fs::remove(dir / "metrics.jsonl");
    Corpus corpus = load_corpus(m);
    // Only the conditional baseline reads labels.
    if (c.variant != nn::Variant::kC) corpus.labels.clear();
    const nn::Checkpoint ck =
        nn::train_hybrid(corpus, es ? &*es : nullptr, s, c, nn::jsonl_sink((dir / "metrics.jsonl").string()));
    ck.save((dir / "model.pt").string());
    out << "trained " << nn::to_string(c.variant) << " model for " << c.total_steps
        << " steps: " << (dir / "model.pt").string() << "\n";
    return kOk;
  }
};

struct EvalPairs {
  Common common;
  std::string checkpoint;
  std::string pairs;
  std::string reference;
  std::string latents = "auto";
  std::size_t min_count = 100;

  void attach(CLI::App* cmd) {
    add_common(cmd, common);
    cmd->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
    cmd->add_option("--pairs", pairs, "Pairs manifest (positive, negative alternating)")->required();
    cmd->add_option("--reference", reference, "Dataset for the code spread (default: the pair images)");
    cmd->add_option("--latents", latents, "auto | da | code");
    cmd->add_option("--min-count", min_count, "Minimum images for the code spread");
  }

  int run(CLI::App* cmd, std::ostream& out) {
    apply_option_config(cmd, common.config);
    const nn::Model model = nn::Model::load(checkpoint);
    const DatasetManifest pm = load_manifest(pairs, "pairs");
    if (pm.kind != ManifestKind::kPairs) throw ConfigError("pairs", "manifest is not a pairs manifest");
    if (pm.records.empty() || pm.records.size() % 2) throw ConfigError("pairs", "needs an even, non-zero record count");
    const auto images = manifest_images(pm);
    PairSet set;
    for (std::size_t i = 0; i < images.size(); i += 2) {
      set.positive.push_back(images[i]);
      set.negative.push_back(images[i + 1]);
    }
    const LatentView view = latent_view(model, latents);
    const auto ref_images = reference.empty() ? images : manifest_images(load_manifest(reference, "reference"));
    const CodeStats stats = code_stats(ref_images, view.encode, min_count);
    const DeltaResult d = pair_delta(set, view.encode, stats);
    const double contrast = contrast_ratio(d);

    json report = d.to_json();
    report["latents"] = view.which;
    report["names"] = view.names;
    report["code_std"] = stats.sigma;
    report["reference_count"] = stats.count;
    json sorted = json::array();
    for (const auto& [l, mag] : d.sorted_magnitudes()) sorted.push_back({{"index", l}, {"name", view.names[l]}, {"abs_delta_prime", mag}});
    report["sorted"] = sorted;
    report["contrast_ratio"] = std::isfinite(contrast) ? json(contrast) : json("inf");
    if (pm.meta.contains("flip_attribute")) report["flip_attribute"] = pm.meta["flip_attribute"];

    std::ostringstream table;
    table << "latent      delta     delta'\n";
    for (const auto& [l, mag] : d.sorted_magnitudes()) {
      (void)mag;
      table << std::left << std::setw(10) << view.names[l] << std::right << std::setw(9) << fmt(d.delta[l])
            << std::setw(11) << fmt(d.delta_prime[l]) << "\n";
    }
    table << "pairs " << d.pairs << ", contrast ratio "
          << (std::isfinite(contrast) ? fmt(contrast, 3) : std::string("inf")) << "\n";

    const auto dir = prepare_out(common.out);
    write_json(dir / "pair_report.json", report);
    write_text(dir / "pair_report.txt", table.str());
    write_resolved(dir, "eval-pairs", cmd);
    out << table.str();
    return kOk;
  }
};

struct EvalVideo {
  Common common;
  std::string checkpoint;
  std::string sequence;
  std::string latents = "auto";
  std::size_t top_k = 7;
  std::size_t plot_k = 16;

  void attach(CLI::App* cmd) {
    add_common(cmd, common);
    cmd->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
    cmd->add_option("--sequence", sequence, "Sequence manifest (frames in order)")->required();
    cmd->add_option("--latents", latents, "auto | da | code");
    cmd->add_option("--top-k", top_k, "Latents in the correlation average");
    cmd->add_option("--plot-k", plot_k, "Latents in the brightness map");
  }

  int run(CLI::App* cmd, std::ostream& out) {
    apply_option_config(cmd, common.config);
    const nn::Model model = nn::Model::load(checkpoint);
    const DatasetManifest sm = load_manifest(sequence, "sequence");
    const auto frames = manifest_images(sm);
    const LatentView view = latent_view(model, latents);
    const CodeMatrix traj = view.encode(frames);
    const CorrelationMatrix corr = sequence_correlation(traj, top_k);
    const CorrelationMatrix plot = sequence_correlation(traj, plot_k);

    json report = corr.to_json();
    report["latents"] = view.which;
    report["names"] = view.names;
    report["frames"] = frames.size();
    json top_names = json::array();
    for (const auto l : corr.top) top_names.push_back(view.names[l]);
    report["top_names"] = top_names;
    json trajectories = json::object();
    for (Eigen::Index l = 0; l < traj.cols(); ++l) {
      std::vector<double> col(traj.col(l).data(), traj.col(l).data() + traj.rows());
      trajectories[view.names[static_cast<std::size_t>(l)]] = col;
    }

    const auto dir = prepare_out(common.out);
    write_json(dir / "correlation_report.json", report);
    write_json(dir / "trajectories.json", trajectories);
    write_png((dir / "brightness_map.png").string(), trajectory_brightness_map(traj.transpose(), plot.top));
    write_resolved(dir, "eval-video", cmd);
    out << "frames " << frames.size() << ", average |corr| over top " << corr.top.size() << ": "
        << fmt(corr.avg_abs_offdiag) << "\n";
    return kOk;
  }
};

struct Traverse {
  Common common;
  std::string checkpoint;
  std::vector<std::string> latent;
  std::string image;
  double lo = -5.0, hi = 5.0;
  int steps = 11;

  void attach(CLI::App* cmd) {
    add_common(cmd, common);
    cmd->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
    cmd->add_option("--latent", latent, "Latents to traverse (default: all)");
    cmd->add_option("--image", image, "PNG whose code is the base (default: zero code)");
    cmd->add_option("--lo", lo, "First value");
    cmd->add_option("--hi", hi, "Last value");
    cmd->add_option("--steps", steps, "Values per latent")->check(CLI::Range(2, 101));
  }

  int run(CLI::App* cmd, std::ostream& out) {
    apply_option_config(cmd, common.config);
    const nn::Model model = nn::Model::load(checkpoint);
    if (!model.can_decode()) throw ConfigError("checkpoint", "checkpoint has no decoder");
    const auto& meta = model.meta();
    std::vector<double> base(static_cast<std::size_t>(meta.code_length()), 0.0);
    if (!image.empty()) {
      const std::vector<Image> x{read_png(image)};
      const auto code = model.encode(x).code;
      for (std::size_t i = 0; i < base.size(); ++i) base[i] = code(0, static_cast<Eigen::Index>(i));
    }
    std::vector<std::size_t> which;
    for (const auto& ref : latent) which.push_back(latent_index(meta, ref, "latent"));
    if (which.empty()) {
      for (std::size_t i = 0; i < base.size(); ++i) which.push_back(i);
    }
    std::vector<double> values;
    for (int i = 0; i < steps; ++i) values.push_back(lo + (hi - lo) * i / (steps - 1));
    const auto names = latent_names(meta);
    std::vector<Image> grid;
    json rows = json::array();
    for (const auto l : which) {
      const auto imgs = latent_traversal(model.decoder(), base, l, values);
      grid.insert(grid.end(), imgs.begin(), imgs.end());
      rows.push_back({{"index", l}, {"name", names[l]}});
    }
    const auto dir = prepare_out(common.out);
    write_png((dir / "traversal.png").string(), tile(grid, steps));
    write_json(dir / "traversal.json", {{"rows", rows}, {"values", values}, {"base", base}});
    write_resolved(dir, "traverse", cmd);
    out << "traversed " << which.size() << " latents x " << steps << " values\n";
    return kOk;
  }
};

struct OrderAttrs {
  Common common;
  std::string checkpoint;
  double lo = -5.0, hi = 5.0;

  void attach(CLI::App* cmd) {
    add_common(cmd, common);
    cmd->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
    cmd->add_option("--lo", lo, "Low code value");
    cmd->add_option("--hi", hi, "High code value");
  }

  int run(CLI::App* cmd, std::ostream& out) {
    apply_option_config(cmd, common.config);
    const nn::Model model = nn::Model::load(checkpoint);
    if (!model.can_decode()) throw ConfigError("checkpoint", "checkpoint has no decoder");
    const auto r = attribute_ordering(model.decoder(), static_cast<std::size_t>(model.meta().code_length()), lo, hi);
    const auto names = latent_names(model.meta());
    json order = json::array();
    for (const auto l : r.order) {
      order.push_back({{"index", l}, {"name", names[l]}, {"distance", r.distance[l]}});
      out << std::left << std::setw(8) << names[l] << fmt(r.distance[l]) << "\n";
    }
    const auto dir = prepare_out(common.out);
    write_json(dir / "ordering.json", {{"order", order}, {"lo", lo}, {"hi", hi}});
    write_resolved(dir, "order-attrs", cmd);
    return kOk;
  }
};

struct Generate {
  Common common;
  std::string checkpoint;
  std::vector<std::string> condition;
  std::size_t count = 16;

  void attach(CLI::App* cmd) {
    add_common(cmd, common);
    cmd->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
    cmd->add_option("--condition", condition, "NAME=VALUE fixed code component (repeatable)");
    cmd->add_option("--count", count, "Images to generate");
  }

  int run(CLI::App* cmd, std::ostream& out) {
    apply_option_config(cmd, common.config);
    const nn::Model model = nn::Model::load(checkpoint);
    if (!model.can_decode()) throw ConfigError("checkpoint", "checkpoint has no decoder");
    const auto& meta = model.meta();
    const auto fixed = parse_assignments(meta, condition, "condition");
    const auto batch = generate(model.decoder(), static_cast<std::size_t>(meta.n_da),
                                static_cast<std::size_t>(meta.n_r), fixed, count, common.seed);
    const auto dir = prepare_out(common.out);
    json codes = json::array();
    for (Eigen::Index i = 0; i < batch.codes.rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(batch.codes.cols()));
      for (Eigen::Index j = 0; j < batch.codes.cols(); ++j) row[static_cast<std::size_t>(j)] = batch.codes(i, j);
      codes.push_back(row);
    }
    if (!batch.images.empty()) write_png((dir / "generated.png").string(), tile(batch.images, 8));
    write_json(dir / "generated.json", {{"names", latent_names(meta)}, {"codes", codes}});
    write_resolved(dir, "generate", cmd);
    out << "generated " << batch.images.size() << " images\n";
    return kOk;
  }
};

struct Transform {
  Common common;
  std::string checkpoint;
  std::string image;
  std::vector<std::string> set;

  void attach(CLI::App* cmd) {
    add_common(cmd, common);
    cmd->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
    cmd->add_option("--image", image, "Input PNG")->required();
    cmd->add_option("--set", set, "NAME=VALUE code edit (repeatable)");
  }

  int run(CLI::App* cmd, std::ostream& out) {
    apply_option_config(cmd, common.config);
    const nn::Model model = nn::Model::load(checkpoint);
    if (!model.can_decode()) throw ConfigError("checkpoint", "checkpoint has no decoder");
    const auto& meta = model.meta();
    const auto edits = parse_assignments(meta, set, "set");
    const Image x = read_png(image);
    const auto original = transform(model.code_encoder(), model.decoder(), x, {});
    const auto edited = transform(model.code_encoder(), model.decoder(), x, edits);
    const auto dir = prepare_out(common.out);
    write_png((dir / "reconstruction.png").string(), original.image);
    write_png((dir / "transformed.png").string(), edited.image);
    const std::vector<Image> strip{x, original.image, edited.image};
    write_png((dir / "comparison.png").string(), tile(strip, 3));
    json e = json::object();
    const auto names = latent_names(meta);
    for (const auto& [l, v] : edits) e[names[l]] = v;
    write_json(dir / "transform.json",
               {{"names", names}, {"code", original.code}, {"edited_code", edited.code}, {"edits", e}});
    write_resolved(dir, "transform", cmd);
    out << "applied " << edits.size() << " edits\n";
    return kOk;
  }
};

struct Serve {
  Common common;
  std::string checkpoint;
  std::string host = "127.0.0.1";
  int port = 8080;

  void attach(CLI::App* cmd) {
    add_common(cmd, common, /*out_required=*/false);
    cmd->add_option("--checkpoint", checkpoint, "Model checkpoint (omit to serve health only)");
    cmd->add_option("--host", host, "Bind address");
    cmd->add_option("--port", port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));
  }

  int run(CLI::App* cmd, std::ostream& out) {
    apply_option_config(cmd, common.config);
    std::optional<nn::Model> model;
    if (!checkpoint.empty()) model = nn::Model::load(checkpoint);
    if (!common.out.empty()) write_resolved(prepare_out(common.out), "serve", cmd);
    auto handler = std::make_shared<const service::Handler>(std::move(model));
    service::ServerOptions opts;
    opts.host = host;
    opts.port = port;
    service::Server server(handler, opts);

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);
    const int bound = server.bind();
    std::thread loop([&] { server.listen(); });
    server.wait_until_ready();
    out << "listening on http://" << host << ":" << bound << std::endl;
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
    loop.join();
    pthread_sigmask(SIG_UNBLOCK, &signals, nullptr);
    return kOk;
  }
};

}  // namespace

std::string resolve_config_path(const std::string& name) {
  if (fs::is_regular_file(name)) return name;
  if (const char* dir = std::getenv(kConfigDirEnv); dir && *dir) {
    for (const auto& candidate : {fs::path(dir) / name, fs::path(dir) / (name + ".json")}) {
      if (fs::is_regular_file(candidate)) return candidate.string();
    }
  }
  throw ConfigError("config", "no config file '" + name + "' (searched the path and $" +
                                  std::string(kConfigDirEnv) + ")");
}

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic-supervised disentangled VAE-GAN pipeline", "synthvae"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  SynthGen synth_gen;
  TrainEncoder train_encoder;
  TrainHybrid train_hybrid;
  EvalPairs eval_pairs;
  EvalVideo eval_video;
  Traverse traverse;
  OrderAttrs order_attrs;
  Generate gen;
  Transform xform;
  Serve serve;

  std::vector<std::pair<CLI::App*, std::function<int(CLI::App*)>>> commands;
  auto add = [&](const char* name, const char* help, auto& handler) {
    CLI::App* cmd = app.add_subcommand(name, help);
    handler.attach(cmd);
    commands.emplace_back(cmd, [&handler, &out](CLI::App* c) { return handler.run(c, out); });
  };
  add("synth-gen", "Render a synthetic or toy-real dataset, pair set or sequence", synth_gen);
  add("train-encoder", "Stage 1: regress attribute codes from synthetic images", train_encoder);
  add("train-hybrid", "Stage 2: train the VAE-GAN hybrid (SYNTH, UC or C)", train_hybrid);
  add("eval-pairs", "Normalized code differences over single-attribute pairs", eval_pairs);
  add("eval-video", "Correlation of code trajectories along a sequence", eval_video);
  add("traverse", "Decode sweeps of single latents", traverse);
  add("order-attrs", "Rank latents by decoded pixel influence", order_attrs);
  add("generate", "Sample images with some code components fixed", gen);
  add("transform", "Encode an image, edit code components, decode", xform);
  add("serve", "HTTP inference service", serve);

  std::vector<std::string> args(argv.rbegin(), argv.rend() - (argv.empty() ? 0 : 1));
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  for (auto& [cmd, handler] : commands) {
    if (!cmd->parsed()) continue;
    try {
      return handler(cmd);
    } catch (const ConfigError& e) {
      err << "config error at '" << e.field() << "': " << e.what() << "\n";
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
    }
    return kFailure;
  }
  return kUsage;
}

}  // namespace synthvae::cli
