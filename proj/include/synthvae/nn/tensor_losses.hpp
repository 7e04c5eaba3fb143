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

#include <torch/torch.h>

#include "synthvae/losses.hpp"

namespace synthvae::nn {

// Batched losses. Each returns the batch mean of the per-example loss defined
// by the scalar versions in synthvae/losses.hpp.

/// x, r: N x ...; per example (alpha / N_pix) sum |x - r|.
torch::Tensor recon_loss(const torch::Tensor& x, const torch::Tensor& r, double alpha);
/// m, sigma: N x L; per example beta sum (m^2 + sigma - 1 - log sigma).
torch::Tensor latent_loss(const torch::Tensor& m, const torch::Tensor& sigma, double beta);
/// p: N probabilities of "real" for reconstructions.
torch::Tensor generator_loss(const torch::Tensor& p_r, double gamma, double epsilon);
torch::Tensor discriminator_loss(const torch::Tensor& p_r, const torch::Tensor& p_x,
                                 double epsilon);

}  // namespace synthvae::nn
