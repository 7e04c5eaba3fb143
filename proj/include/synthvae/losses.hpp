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

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace synthvae {

struct LossWeights {
  double alpha = 1.0;
  double beta = 8.0;
  double gamma = 0.03;
  double epsilon = 1e-8;

  nlohmann::json to_json() const;
};

/// Per-step loss values. `l_total` is exactly `l_r + l_l + l_g`.
struct LossReport {
  double l_r = 0.0;
  double l_l = 0.0;
  double l_g = 0.0;
  double l_total = 0.0;
  double l_d = 0.0;
};

// Single-example losses in double precision. Batched tensor versions used by
// the trainer live in nn/tensor_losses.hpp and reduce with a batch mean.

/// (alpha / N) * sum |x - r|, N the element count.
double recon_loss(std::span<const double> x, std::span<const double> r, double alpha);

/// beta * sum_l (m(l)^2 + sigma(l) - 1 - log sigma(l)); sigma is a variance.
double latent_loss(std::span<const double> m, std::span<const double> sigma, double beta);

/// -gamma * log(p + epsilon), p = D(r) clipped to [0, 1].
double generator_loss(double p_real_of_r, double gamma, double epsilon);

/// -log(1 - D(r) + epsilon) - log(D(x) + epsilon), both clipped to [0, 1].
double discriminator_loss(double p_real_of_r, double p_real_of_x, double epsilon);

LossReport total_generator_loss(std::span<const double> x, std::span<const double> r,
                                std::span<const double> m, std::span<const double> sigma,
                                double p_real_of_r, const LossWeights& w);

/// Analytic gradients with respect to the direct inputs.
std::vector<double> recon_loss_grad_r(std::span<const double> x, std::span<const double> r,
                                      double alpha);
struct LatentGrad {
  std::vector<double> d_m;
  std::vector<double> d_sigma;
};
LatentGrad latent_loss_grad(std::span<const double> m, std::span<const double> sigma, double beta);
double generator_loss_grad(double p_real_of_r, double gamma, double epsilon);
struct DiscriminatorGrad {
  double d_p_r = 0.0;
  double d_p_x = 0.0;
};
DiscriminatorGrad discriminator_loss_grad(double p_real_of_r, double p_real_of_x, double epsilon);

}  // namespace synthvae
