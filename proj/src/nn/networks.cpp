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

#include "synthvae/nn/networks.hpp"

#include <algorithm>
#include <cmath>

#include "synthvae/errors.hpp"

namespace synthvae::nn {

namespace {

constexpr double kSlope = 0.2;

torch::nn::Conv2dOptions down_conv(int64_t in, int64_t out) {
  return torch::nn::Conv2dOptions(in, out, 4).stride(2).padding(1);
}

torch::nn::Sequential conv_stack(ImageDims dims, const ArchConfig& arch) {
  torch::nn::Sequential body;
  int64_t in = dims.channels;
  for (int s = 0; s < arch.stages; ++s) {
    body->push_back(torch::nn::Conv2d(down_conv(in, arch.width(s))));
    body->push_back(torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(kSlope)));
    in = arch.width(s);
  }
  body->push_back(torch::nn::Flatten());
  return body;
}

int64_t flat_size(ImageDims dims, const ArchConfig& arch) {
  const int64_t f = int64_t{1} << arch.stages;
  return arch.width(arch.stages - 1) * (dims.height / f) * (dims.width / f);
}

}  // namespace

int ArchConfig::width(int stage) const {
  return std::min(max_width, base_width << std::min(stage, 16));
}

void ArchConfig::check(ImageDims dims) const {
  if (stages < 1 || base_width < 1 || max_width < base_width)
    throw ShapeError("architecture needs stages >= 1 and 1 <= base_width <= max_width");
  const int f = 1 << stages;
  if (dims.height % f != 0 || dims.width % f != 0)
    throw ShapeError("image dims " + dims.str() + " not divisible by 2^" + std::to_string(stages));
}

nlohmann::json ArchConfig::to_json() const {
  return {{"stages", stages}, {"base_width", base_width}, {"max_width", max_width}};
}

ArchConfig ArchConfig::from_json(const nlohmann::json& doc) {
  ArchConfig a;
  a.stages = doc.value("stages", a.stages);
  a.base_width = doc.value("base_width", a.base_width);
  a.max_width = doc.value("max_width", a.max_width);
  return a;
}

ConvEncoderImpl::ConvEncoderImpl(ImageDims dims, const ArchConfig& arch, int64_t n_mean,
                                 int64_t n_var, bool zero_init_mean)
    : n_mean_(n_mean), n_var_(n_var) {
  arch.check(dims);
  body_ = register_module("body", conv_stack(dims, arch));
  const int64_t flat = flat_size(dims, arch);
  if (n_mean > 0) {
    mean_head_ = register_module("mean", torch::nn::Linear(flat, n_mean));
    if (zero_init_mean) {
      torch::NoGradGuard guard;
      mean_head_->weight.zero_();
      mean_head_->bias.zero_();
    }
  }
  if (n_var > 0) {
    var_head_ = register_module("var", torch::nn::Linear(flat, n_var));
    torch::NoGradGuard guard;
    var_head_->weight.mul_(0.1);
    var_head_->bias.fill_(std::log(std::exp(1.0) - 1.0));  // softplus^-1(1)
  }
}

EncoderOutput ConvEncoderImpl::forward(const torch::Tensor& x) {
  const auto h = body_->forward(x);
  EncoderOutput out;
  out.m = n_mean_ > 0 ? mean_head_->forward(h) : torch::zeros({x.size(0), 0}, x.options());
  if (var_head_) out.sigma = torch::nn::functional::softplus(var_head_->forward(h)) + 1e-6;
  return out;
}

ConvDecoderImpl::ConvDecoderImpl(ImageDims dims, const ArchConfig& arch, int64_t code_length)
    : dims_(dims) {
  arch.check(dims);
  const int64_t f = int64_t{1} << arch.stages;
  c0_ = arch.width(arch.stages - 1);
  h0_ = dims.height / f;
  w0_ = dims.width / f;
  project_ = register_module("project", torch::nn::Linear(code_length, c0_ * h0_ * w0_));
  torch::nn::Sequential body;
  int64_t in = c0_;
  for (int s = arch.stages - 1; s >= 0; --s) {
    const int64_t out = s > 0 ? arch.width(s - 1) : arch.base_width;
    body->push_back(torch::nn::Upsample(
        torch::nn::UpsampleOptions().scale_factor(std::vector<double>{2.0, 2.0}).mode(torch::kNearest)));
    body->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3).padding(1)));
    body->push_back(torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(kSlope)));
    in = out;
  }
  body->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(in, dims.channels, 3).padding(1)));
  body->push_back(torch::nn::Tanh());
  body_ = register_module("body", body);
}

torch::Tensor ConvDecoderImpl::forward(const torch::Tensor& z) {
  auto h = torch::leaky_relu(project_->forward(z), kSlope).view({z.size(0), c0_, h0_, w0_});
  return body_->forward(h);
}

DiscriminatorImpl::DiscriminatorImpl(ImageDims dims, const ArchConfig& arch) {
  arch.check(dims);
  body_ = register_module("body", conv_stack(dims, arch));
  out_ = register_module("out", torch::nn::Linear(flat_size(dims, arch), 1));
}

torch::Tensor DiscriminatorImpl::logits(const torch::Tensor& x) {
  return out_->forward(body_->forward(x)).squeeze(1);
}

torch::Tensor DiscriminatorImpl::forward(const torch::Tensor& x) { return torch::sigmoid(logits(x)); }

torch::Tensor reparameterize(const EncoderOutput& out, const torch::Tensor& eps) {
  if (!out.m.sizes().equals(eps.sizes()) || !out.sigma.sizes().equals(eps.sizes()))
    throw ShapeError("reparameterize: eps shape does not match the encoder output");
  return out.m + torch::sqrt(out.sigma) * eps;
}

torch::Tensor concat_latent(const torch::Tensor& z_da, const torch::Tensor& z_r) {
  if (z_da.dim() != z_r.dim() || z_da.size(0) != z_r.size(0))
    throw ShapeError("concat_latent: batch shapes differ");
  return torch::cat({z_da, z_r}, -1);
}

std::pair<torch::Tensor, torch::Tensor> split_latent(const torch::Tensor& z, int64_t n_da) {
  if (n_da < 0 || n_da > z.size(-1)) throw ShapeError("split_latent: n_da out of range");
  return {z.narrow(-1, 0, n_da), z.narrow(-1, n_da, z.size(-1) - n_da)};
}

torch::Tensor to_tensor(std::span<const Image> images) {
  if (images.empty()) throw ShapeError("to_tensor: empty batch");
  const ImageDims d = images.front().dims;
  auto t = torch::empty({static_cast<int64_t>(images.size()), d.height, d.width, d.channels});
  float* dst = t.data_ptr<float>();
  for (const auto& img : images) {
    if (img.dims != d) throw ShapeError("to_tensor: mixed image dims in batch");
    dst = std::copy(img.pixels.begin(), img.pixels.end(), dst);
  }
  return t.permute({0, 3, 1, 2}).contiguous();
}

torch::Tensor to_tensor(const Image& image) { return to_tensor(std::span<const Image>(&image, 1)); }

std::vector<Image> to_images(const torch::Tensor& batch) {
  const auto hwc = batch.detach().to(torch::kFloat).permute({0, 2, 3, 1}).contiguous();
  const ImageDims d{static_cast<int>(hwc.size(1)), static_cast<int>(hwc.size(2)),
                    static_cast<int>(hwc.size(3))};
  std::vector<Image> out;
  const float* src = hwc.data_ptr<float>();
  for (int64_t i = 0; i < hwc.size(0); ++i) {
    Image img(d);
    std::copy(src, src + d.count(), img.pixels.begin());
    src += d.count();
    out.push_back(std::move(img));
  }
  return out;
}

torch::Tensor corpus_batch(const std::vector<std::uint8_t>& pixels, ImageDims dims,
                           std::span<const std::size_t> rows) {
  const auto n = static_cast<int64_t>(rows.size());
  auto t = torch::empty({n, dims.height, dims.width, dims.channels});
  float* dst = t.data_ptr<float>();
  const std::size_t stride = dims.count();
  for (const std::size_t r : rows) {
    if ((r + 1) * stride > pixels.size()) throw ShapeError("corpus_batch: row out of range");
    const std::uint8_t* src = pixels.data() + r * stride;
    for (std::size_t k = 0; k < stride; ++k) dst[k] = dequantize(src[k]);
    dst += stride;
  }
  return t.permute({0, 3, 1, 2}).contiguous();
}

}  // namespace synthvae::nn
