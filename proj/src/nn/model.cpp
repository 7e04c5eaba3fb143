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

#include "synthvae/nn/model.hpp"

#include <algorithm>

#include "synthvae/errors.hpp"

namespace synthvae::nn {

namespace {

constexpr std::size_t kChunk = 256;

}  // namespace

CodeMatrix to_matrix(const torch::Tensor& t) {
  const auto d = t.detach().to(torch::kDouble).contiguous();
  CodeMatrix m(d.size(0), d.dim() > 1 ? d.size(1) : 1);
  const double* src = d.data_ptr<double>();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = src[i * m.cols() + j];
  return m;
}

torch::Tensor code_tensor(const CodeMatrix& m) {
  auto t = torch::empty({m.rows(), m.cols()});
  float* dst = t.data_ptr<float>();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) dst[i * m.cols() + j] = static_cast<float>(m(i, j));
  return t;
}

Model::Model(Checkpoint checkpoint) : ckpt_(std::move(checkpoint)) {
  if (ckpt_.synth_encoder) ckpt_.synth_encoder->eval();
  if (ckpt_.real_encoder) ckpt_.real_encoder->eval();
  if (ckpt_.decoder) ckpt_.decoder->eval();
  if (ckpt_.discriminator) ckpt_.discriminator->eval();
}

Model Model::load(const std::string& path) { return Model(Checkpoint::load(path)); }

torch::Tensor Model::batch(std::span<const Image> images) const {
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].dims != meta().dims)
      throw ShapeError("image " + std::to_string(i) + " has dims " + images[i].dims.str() +
                       ", model expects " + meta().dims.str());
  }
  return to_tensor(images);
}

Model::Encoding Model::encode(std::span<const Image> images) const {
  const auto& m = meta();
  const int n_da = m.n_da;
  const int n_r = m.kind == ModelKind::kSynthEncoder ? 0 : m.n_r;
  Encoding out;
  const auto n = static_cast<Eigen::Index>(images.size());
  out.z_da.resize(n, n_da);
  out.z_r_mean.resize(n, n_r);
  torch::NoGradGuard guard;
  for (std::size_t start = 0; start < images.size(); start += kChunk) {
    const auto part = images.subspan(start, std::min(kChunk, images.size() - start));
    const auto x = batch(part);
    torch::Tensor da, r;
    if (m.kind == ModelKind::kSynthEncoder || m.variant == Variant::kSynth) {
      da = ckpt_.synth_encoder.ptr()->forward(x).m;
    }
    if (ckpt_.real_encoder) {
      const auto enc = ckpt_.real_encoder.ptr()->forward(x);
      if (m.variant == Variant::kC) {
        da = enc.m.narrow(1, 0, n_da);
        r = enc.m.narrow(1, n_da, n_r);
      } else {
        r = enc.m;
      }
    }
    const auto row = static_cast<Eigen::Index>(start);
    const auto rows = static_cast<Eigen::Index>(part.size());
    if (n_da > 0) out.z_da.middleRows(row, rows) = to_matrix(da);
    if (n_r > 0) out.z_r_mean.middleRows(row, rows) = to_matrix(r);
  }
  out.code.resize(n, n_da + n_r);
  out.code << out.z_da, out.z_r_mean;
  return out;
}

std::vector<Image> Model::decode(const CodeMatrix& codes) const {
  if (!can_decode()) throw Error("checkpoint has no decoder");
  if (codes.cols() != meta().code_length())
    throw ShapeError("code length " + std::to_string(codes.cols()) + ", model expects " +
                     std::to_string(meta().code_length()));
  std::vector<Image> out;
  torch::NoGradGuard guard;
  for (Eigen::Index start = 0; start < codes.rows(); start += static_cast<Eigen::Index>(kChunk)) {
    const auto rows = std::min<Eigen::Index>(static_cast<Eigen::Index>(kChunk), codes.rows() - start);
    const auto imgs = to_images(ckpt_.decoder.ptr()->forward(code_tensor(codes.middleRows(start, rows))));
    out.insert(out.end(), imgs.begin(), imgs.end());
  }
  return out;
}

EncodeFn Model::code_encoder() const {
  return [this](std::span<const Image> images) { return encode(images).code; };
}

EncodeFn Model::da_encoder() const {
  return [this](std::span<const Image> images) { return encode(images).z_da; };
}

DecodeFn Model::decoder() const {
  return [this](const CodeMatrix& codes) { return decode(codes); };
}

}  // namespace synthvae::nn
