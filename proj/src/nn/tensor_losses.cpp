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

#include "synthvae/nn/tensor_losses.hpp"

#include "synthvae/errors.hpp"

namespace synthvae::nn {

torch::Tensor recon_loss(const torch::Tensor& x, const torch::Tensor& r, double alpha) {
  if (!x.sizes().equals(r.sizes())) throw ShapeError("recon_loss: shape mismatch");
  return alpha * (x - r).abs().flatten(1).mean(1).mean();
}

torch::Tensor latent_loss(const torch::Tensor& m, const torch::Tensor& sigma, double beta) {
  if (!m.sizes().equals(sigma.sizes())) throw ShapeError("latent_loss: shape mismatch");
  if (m.size(-1) == 0) return torch::zeros({}, m.options());
  return beta * (m.square() + sigma - 1 - torch::log(sigma)).sum(-1).mean();
}

torch::Tensor generator_loss(const torch::Tensor& p_r, double gamma, double epsilon) {
  return -gamma * torch::log(p_r.clamp(0.0, 1.0) + epsilon).mean();
}

torch::Tensor discriminator_loss(const torch::Tensor& p_r, const torch::Tensor& p_x,
                                 double epsilon) {
  return (-torch::log(1.0 - p_r.clamp(0.0, 1.0) + epsilon) -
          torch::log(p_x.clamp(0.0, 1.0) + epsilon))
      .mean();
}

}  // namespace synthvae::nn
