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

#include "synthvae/nn/regularizers.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include "synthvae/errors.hpp"

namespace synthvae::nn {

at::Generator make_generator(std::uint64_t seed) {
  return at::make_generator<at::CPUGeneratorImpl>(seed);
}

EqualizedBatch equalizing_noise(const torch::Tensor& images, const EqualizingNoiseSpec& spec,
                                at::Generator& gen) {
  if (!(spec.sigma_std >= 0.0)) throw RangeError("equalizing noise sigma_std must be >= 0");
  const int64_t n = images.size(0);
  EqualizedBatch out;
  if (spec.sigma_std == 0.0) {
    out.images = images.clone();
    out.scales = torch::zeros({n}, images.options());
    return out;
  }
  out.scales = (torch::randn({n}, gen, images.options()) * spec.sigma_std).abs();
  std::vector<int64_t> shape(images.dim(), 1);
  shape[0] = n;
  const auto noise = torch::randn(images.sizes(), gen, images.options());
  out.images = images + noise * out.scales.view(shape);
  return out;
}

ExploredSigma exploratory_replace(const torch::Tensor& sigma, const ExploratorySpec& spec,
                                  at::Generator& gen) {
  if (!(spec.p >= 0.0 && spec.p <= 1.0)) throw RangeError("exploratory p must be in [0, 1]");
  if (!(spec.sigma_explore > 0.0)) throw RangeError("sigma_explore must be > 0");
  ExploredSigma out;
  const int64_t n = sigma.size(0);
  out.replaced = torch::rand({n}, gen, sigma.options().dtype(torch::kDouble)) < spec.p;
  const auto mask = out.replaced.to(sigma.scalar_type()).unsqueeze(1);
  out.sigma = sigma * (1 - mask) + mask * spec.sigma_explore;
  return out;
}

torch::Tensor input_noise(const torch::Tensor& images, double magnitude, at::Generator& gen) {
  if (!(magnitude >= 0.0)) throw RangeError("input noise magnitude must be >= 0");
  if (magnitude == 0.0) return images;
  return images + torch::randn(images.sizes(), gen, images.options()) * magnitude;
}

}  // namespace synthvae::nn
