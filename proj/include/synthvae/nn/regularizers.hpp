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

#include <nlohmann/json.hpp>
#include <torch/torch.h>

namespace synthvae::nn {

/// Per-image noise scale s ~ N(0, sigma_std); pixels get N(0, |s|).
struct EqualizingNoiseSpec {
  double sigma_std = 0.25;
};

/// With probability p, every z_da spread of a batch element becomes
/// sigma_explore.
struct ExploratorySpec {
  double p = 0.01;
  double sigma_explore = 2.0;
};

struct EqualizedBatch {
  torch::Tensor images;  // not clamped
  torch::Tensor scales;  // |s| per image, shape N
};

/// Images are N x ...; the first axis is the image axis.
EqualizedBatch equalizing_noise(const torch::Tensor& images, const EqualizingNoiseSpec& spec,
                                at::Generator& gen);

struct ExploredSigma {
  torch::Tensor sigma;
  torch::Tensor replaced;  // bool, shape N
};

/// sigma: N x n_da variances.
ExploredSigma exploratory_replace(const torch::Tensor& sigma, const ExploratorySpec& spec,
                                  at::Generator& gen);

/// Adds i.i.d. N(0, magnitude) to every element.
torch::Tensor input_noise(const torch::Tensor& images, double magnitude, at::Generator& gen);

at::Generator make_generator(std::uint64_t seed);

}  // namespace synthvae::nn
