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

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "synthvae/metrics.hpp"
#include "synthvae/nn/checkpoint.hpp"

namespace synthvae::nn {

/// Inference-mode view of a checkpoint. Forward passes run without autograd
/// and take no locks; the weights are never modified.
class Model {
 public:
  explicit Model(Checkpoint checkpoint);
  static Model load(const std::string& path);

  const ModelMeta& meta() const { return ckpt_.meta; }
  const Checkpoint& checkpoint() const { return ckpt_; }
  bool can_decode() const { return static_cast<bool>(ckpt_.decoder); }

  struct Encoding {
    CodeMatrix z_da;      // N x n_da
    CodeMatrix z_r_mean;  // N x n_r
    CodeMatrix code;      // N x (n_da + n_r), z_da then z_r
  };

  /// Mean codes, no sampling. z_da comes from the synthetic encoder (SYNTH or
  /// stage 1), the label head (C) or is empty (UC).
  Encoding encode(std::span<const Image> images) const;
  std::vector<Image> decode(const CodeMatrix& codes) const;

  /// Full concatenated code.
  EncodeFn code_encoder() const;
  /// Domain-adapted part only.
  EncodeFn da_encoder() const;
  DecodeFn decoder() const;

 private:
  torch::Tensor batch(std::span<const Image> images) const;
  Checkpoint ckpt_;
};

CodeMatrix to_matrix(const torch::Tensor& t);
torch::Tensor code_tensor(const CodeMatrix& m);

}  // namespace synthvae::nn
