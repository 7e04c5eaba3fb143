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
#include <string>

#include <nlohmann/json.hpp>

#include "synthvae/losses.hpp"
#include "synthvae/nn/networks.hpp"
#include "synthvae/nn/regularizers.hpp"

namespace synthvae::nn {

/// SYNTH: z_da from the frozen synthetic encoder. UC: no domain-adapted
/// part, every latent free. C: z_da holds the true labels.
enum class Variant { kSynth, kUC, kC };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct TrainConfig {
  static constexpr int kVersion = 1;

  int batch_size = 64;
  double lr0 = 5e-4;
  double lr_drop_factor = 4.0;
  std::int64_t total_steps = 30000;
  double grad_clip_norm = 5.0;
  LossWeights weights;
  EqualizingNoiseSpec equalizing;
  ExploratorySpec exploratory;
  double input_noise = 0.2;
  std::uint64_t seed = 0;
  Variant variant = Variant::kSynth;
  ArchConfig arch;
  int n_r = 16;
  /// Total code length shared by all variants; 0 means schema size + n_r.
  /// Baselines fill it with free latents (UC) or labels plus free latents (C).
  int code_length = 0;
  /// Single-threaded, fixed-order execution for reproducible traces.
  bool determinism = true;
  /// Metrics are logged every `log_every` steps (and at the last step).
  std::int64_t log_every = 1;

  /// Throws ConfigError naming the offending field.
  void validate() const;

  nlohmann::json to_json() const;
  /// Missing fields keep their defaults; unknown fields are rejected.
  static TrainConfig from_json(const nlohmann::json& doc);
  static TrainConfig load(const std::string& path);
};

struct LatentSplit {
  int n_da = 0;
  int n_r = 0;
};

/// Size-matched latent layout of a variant for `n_attr` schema attributes.
LatentSplit latent_split(const TrainConfig& config, int n_attr);

/// lr0 on [0, T/3), lr0/f on [T/3, 2T/3), lr0/f^2 on [2T/3, T).
double lr_schedule(std::int64_t step, const TrainConfig& config);

}  // namespace synthvae::nn
