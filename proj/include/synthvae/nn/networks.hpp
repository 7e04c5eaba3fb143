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
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "synthvae/image.hpp"

namespace synthvae::nn {

/// Depth and width of the convolutional stacks. Each stage halves (encoder,
/// discriminator) or doubles (decoder) the spatial size; widths double per
/// stage from `base_width`, capped at `max_width`.
struct ArchConfig {
  int stages = 4;
  int base_width = 32;
  int max_width = 256;

  int width(int stage) const;
  /// Throws ShapeError when dims are not divisible by 2^stages.
  void check(ImageDims dims) const;

  nlohmann::json to_json() const;
  static ArchConfig from_json(const nlohmann::json& doc);
};

/// Latent means and spreads. `sigma` is a variance and strictly positive.
struct EncoderOutput {
  torch::Tensor m;
  torch::Tensor sigma;
};

/// Strided-convolution encoder with a mean head and an optional variance head.
/// The variance head maps through softplus, biased so an untrained network
/// emits sigma = 1.
class ConvEncoderImpl : public torch::nn::Module {
 public:
  ConvEncoderImpl(ImageDims dims, const ArchConfig& arch, int64_t n_mean, int64_t n_var,
                  bool zero_init_mean = false);

  /// x: N x C x H x W. `sigma` is undefined when there is no variance head.
  EncoderOutput forward(const torch::Tensor& x);

  int64_t n_mean() const { return n_mean_; }
  int64_t n_var() const { return n_var_; }

 private:
  int64_t n_mean_, n_var_;
  torch::nn::Sequential body_{nullptr};
  torch::nn::Linear mean_head_{nullptr};
  torch::nn::Linear var_head_{nullptr};
};
TORCH_MODULE(ConvEncoder);

/// Linear projection to a coarse grid, then upsample + 3x3 convolution stages,
/// ending in tanh so the output lies in [-1, 1].
class ConvDecoderImpl : public torch::nn::Module {
 public:
  ConvDecoderImpl(ImageDims dims, const ArchConfig& arch, int64_t code_length);
  torch::Tensor forward(const torch::Tensor& z);

 private:
  ImageDims dims_;
  int64_t c0_, h0_, w0_;
  torch::nn::Linear project_{nullptr};
  torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(ConvDecoder);

/// Strided convolutions then a linear unit; returns P(real) via sigmoid.
class DiscriminatorImpl : public torch::nn::Module {
 public:
  DiscriminatorImpl(ImageDims dims, const ArchConfig& arch);
  /// Probability in (0, 1), shape N.
  torch::Tensor forward(const torch::Tensor& x);
  /// Pre-sigmoid score, shape N.
  torch::Tensor logits(const torch::Tensor& x);

 private:
  torch::nn::Sequential body_{nullptr};
  torch::nn::Linear out_{nullptr};
};
TORCH_MODULE(Discriminator);

/// m + sqrt(sigma) * eps.
torch::Tensor reparameterize(const EncoderOutput& out, const torch::Tensor& eps);

/// Concatenation along the last axis, domain-adapted part first.
torch::Tensor concat_latent(const torch::Tensor& z_da, const torch::Tensor& z_r);
std::pair<torch::Tensor, torch::Tensor> split_latent(const torch::Tensor& z, int64_t n_da);

/// HWC images in [-1, 1] to an N x C x H x W float tensor, and back.
torch::Tensor to_tensor(std::span<const Image> images);
torch::Tensor to_tensor(const Image& image);
std::vector<Image> to_images(const torch::Tensor& batch);

/// Rows of a Corpus as a float batch (levels dequantized to [-1, 1]).
torch::Tensor corpus_batch(const std::vector<std::uint8_t>& pixels, ImageDims dims,
                           std::span<const std::size_t> rows);

}  // namespace synthvae::nn
