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

#include "synthvae/nn/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "synthvae/errors.hpp"

namespace synthvae::nn {

namespace {

using json = nlohmann::json;

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void reject_unknown(const json& obj, const std::string& prefix, std::set<std::string> known) {
  if (!obj.is_object()) throw ConfigError(prefix.empty() ? "<root>" : prefix, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!known.contains(key)) throw ConfigError(join(prefix, key), "unknown field");
  }
}

template <typename T>
void read(const json& obj, const std::string& prefix, const std::string& key, T& out) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(join(prefix, key), "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(join(prefix, key), "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)
          throw ConfigError(join(prefix, key), "expected a non-negative integer");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(join(prefix, key), "expected a number");
    } else {
      if (!v.is_string()) throw ConfigError(join(prefix, key), "expected a string");
    }
    out = v.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(join(prefix, key), e.what());
  }
}

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kSynth: return "SYNTH";
    case Variant::kUC: return "UC";
    case Variant::kC: return "C";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "SYNTH" || s == "synth") return Variant::kSynth;
  if (s == "UC" || s == "uc") return Variant::kUC;
  if (s == "C" || s == "c") return Variant::kC;
  throw ConfigError("variant", "expected SYNTH, UC or C, got '" + s + "'");
}

void TrainConfig::validate() const {
  require(batch_size > 0, "batch_size", "must be positive");
  require(lr0 > 0 && std::isfinite(lr0), "lr0", "must be positive");
  require(lr_drop_factor >= 1.0, "lr_drop_factor", "must be >= 1");
  require(total_steps > 0, "total_steps", "must be positive");
  require(grad_clip_norm > 0, "grad_clip_norm", "must be positive");
  require(weights.alpha >= 0, "weights.alpha", "must be >= 0");
  require(weights.beta >= 0, "weights.beta", "must be >= 0");
  require(weights.gamma >= 0, "weights.gamma", "must be >= 0");
  require(weights.epsilon > 0, "weights.epsilon", "must be positive");
  require(equalizing.sigma_std >= 0, "regularization.equalizing.sigma_std", "must be >= 0");
  require(exploratory.p >= 0 && exploratory.p <= 1, "regularization.exploratory.p",
          "must be in [0, 1]");
  require(exploratory.sigma_explore > 0, "regularization.exploratory.sigma_explore",
          "must be positive");
  require(input_noise >= 0, "regularization.input_noise", "must be >= 0");
  require(arch.stages >= 1 && arch.stages <= 6, "architecture.stages", "must be in [1, 6]");
  require(arch.base_width >= 1, "architecture.base_width", "must be positive");
  require(arch.max_width >= arch.base_width, "architecture.max_width", "must be >= base_width");
  require(n_r >= 0, "architecture.n_r", "must be >= 0");
  require(code_length >= 0, "architecture.code_length", "must be >= 0");
  require(log_every > 0, "log_every", "must be positive");
}

nlohmann::json TrainConfig::to_json() const {
  json arch_doc = arch.to_json();
  arch_doc["n_r"] = n_r;
  arch_doc["code_length"] = code_length;
  return {{"version", kVersion},
          {"batch_size", batch_size},
          {"lr0", lr0},
          {"lr_drop_factor", lr_drop_factor},
          {"total_steps", total_steps},
          {"grad_clip_norm", grad_clip_norm},
          {"weights", weights.to_json()},
          {"regularization",
           {{"equalizing", {{"sigma_std", equalizing.sigma_std}}},
            {"exploratory", {{"p", exploratory.p}, {"sigma_explore", exploratory.sigma_explore}}},
            {"input_noise", input_noise}}},
          {"seed", seed},
          {"variant", to_string(variant)},
          {"architecture", arch_doc},
          {"determinism", determinism},
          {"log_every", log_every}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& doc) {
  TrainConfig c;
  reject_unknown(doc, "",
                 {"version", "batch_size", "lr0", "lr_drop_factor", "total_steps", "grad_clip_norm",
                  "weights", "regularization", "seed", "variant", "architecture", "determinism",
                  "log_every"});
  if (doc.contains("version")) {
    int version = 0;
    read(doc, "", "version", version);
    require(version == kVersion, "version",
            "unsupported config version " + std::to_string(version));
  }
  read(doc, "", "batch_size", c.batch_size);
  read(doc, "", "lr0", c.lr0);
  read(doc, "", "lr_drop_factor", c.lr_drop_factor);
  read(doc, "", "total_steps", c.total_steps);
  read(doc, "", "grad_clip_norm", c.grad_clip_norm);
  read(doc, "", "seed", c.seed);
  read(doc, "", "determinism", c.determinism);
  read(doc, "", "log_every", c.log_every);
  if (doc.contains("variant")) {
    std::string v;
    read(doc, "", "variant", v);
    c.variant = variant_from_string(v);
  }
  if (doc.contains("weights")) {
    const auto& w = doc.at("weights");
    reject_unknown(w, "weights", {"alpha", "beta", "gamma", "epsilon"});
    read(w, "weights", "alpha", c.weights.alpha);
    read(w, "weights", "beta", c.weights.beta);
    read(w, "weights", "gamma", c.weights.gamma);
    read(w, "weights", "epsilon", c.weights.epsilon);
  }
  if (doc.contains("regularization")) {
    const auto& r = doc.at("regularization");
    reject_unknown(r, "regularization", {"equalizing", "exploratory", "input_noise"});
    read(r, "regularization", "input_noise", c.input_noise);
    if (r.contains("equalizing")) {
      const auto& e = r.at("equalizing");
      reject_unknown(e, "regularization.equalizing", {"sigma_std"});
      read(e, "regularization.equalizing", "sigma_std", c.equalizing.sigma_std);
    }
    if (r.contains("exploratory")) {
      const auto& e = r.at("exploratory");
      reject_unknown(e, "regularization.exploratory", {"p", "sigma_explore"});
      read(e, "regularization.exploratory", "p", c.exploratory.p);
      read(e, "regularization.exploratory", "sigma_explore", c.exploratory.sigma_explore);
    }
  }
  if (doc.contains("architecture")) {
    const auto& a = doc.at("architecture");
    reject_unknown(a, "architecture", {"stages", "base_width", "max_width", "n_r", "code_length"});
    read(a, "architecture", "stages", c.arch.stages);
    read(a, "architecture", "base_width", c.arch.base_width);
    read(a, "architecture", "max_width", c.arch.max_width);
    read(a, "architecture", "n_r", c.n_r);
    read(a, "architecture", "code_length", c.code_length);
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open config");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
  }
  return from_json(doc);
}

LatentSplit latent_split(const TrainConfig& config, int n_attr) {
  const int total = config.code_length > 0 ? config.code_length : n_attr + config.n_r;
  if (total < n_attr && config.variant != Variant::kUC)
    throw ConfigError("architecture.code_length",
                      "shorter than the " + std::to_string(n_attr) + " attribute latents");
  switch (config.variant) {
    case Variant::kSynth:
    case Variant::kC: return {n_attr, total - n_attr};
    case Variant::kUC: return {0, total};
  }
  return {};
}

double lr_schedule(std::int64_t step, const TrainConfig& config) {
  const std::int64_t t = config.total_steps;
  if (step < 0 || step >= t) throw RangeError("lr_schedule: step outside [0, total_steps)");
  if (3 * step < t) return config.lr0;
  if (3 * step < 2 * t) return config.lr0 / config.lr_drop_factor;
  return config.lr0 / (config.lr_drop_factor * config.lr_drop_factor);
}

}  // namespace synthvae::nn
