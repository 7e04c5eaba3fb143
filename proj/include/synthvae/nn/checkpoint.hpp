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
#include <torch/torch.h>

#include "synthvae/image.hpp"
#include "synthvae/nn/config.hpp"
#include "synthvae/nn/networks.hpp"
#include "synthvae/schema.hpp"

namespace synthvae::nn {

enum class ModelKind { kSynthEncoder, kHybrid };

/// Everything needed to rebuild the networks, plus provenance.
struct ModelMeta {
  static constexpr int kFormatVersion = 1;

  ModelKind kind = ModelKind::kHybrid;
  AttributeSchema schema;
  ImageDims dims;
  ArchConfig arch;
  Variant variant = Variant::kSynth;
  int n_da = 0;  // domain-adapted (or label) latents; 0 for UC
  int n_r = 0;   // free latents
  std::string renderer_version;
  nlohmann::json config = nlohmann::json::object();
  std::int64_t step = 0;

  int code_length() const { return n_da + n_r; }

  nlohmann::json to_json() const;
  static ModelMeta from_json(const nlohmann::json& doc);
};

/// Networks of one run. Stage 1 fills only `synth_encoder`; stage 2 holds the
/// frozen synthetic encoder (SYNTH variant) and the three trained networks.
struct Checkpoint {
  ModelMeta meta;
  ConvEncoder synth_encoder{nullptr};
  ConvEncoder real_encoder{nullptr};
  ConvDecoder decoder{nullptr};
  Discriminator discriminator{nullptr};

  /// Allocates freshly initialised networks matching `meta`.
  static Checkpoint create(const ModelMeta& meta);

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

/// Synthetic encoder: code of length n_da, zero-initialised final layer.
ConvEncoder make_synth_encoder(ImageDims dims, const ArchConfig& arch, int n_da);

/// Real encoder heads per variant (mean head, variance head):
///   SYNTH (n_r, n_da + n_r)   the z_da mean comes from the synthetic encoder
///   UC    (n_r, n_r)
///   C     (n_da + n_r, n_da + n_r)   the first n_da means predict the labels
ConvEncoder make_real_encoder(const ModelMeta& meta);

/// SHA-256 (hex) over parameter names, shapes and raw bytes in registration order.
std::string parameter_hash(const torch::nn::Module& module);

std::string to_string(ModelKind kind);

}  // namespace synthvae::nn
