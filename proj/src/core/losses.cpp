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

#include "synthvae/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "synthvae/errors.hpp"

namespace synthvae {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw ShapeError(std::string(what) + ": size mismatch " + std::to_string(a) + " vs " +
                     std::to_string(b));
}

void require_positive(std::span<const double> sigma) {
  for (std::size_t l = 0; l < sigma.size(); ++l) {
    if (!(sigma[l] > 0.0))
      throw RangeError("latent_loss: sigma(" + std::to_string(l) + ") = " +
                       std::to_string(sigma[l]) + " is not positive");
  }
}

double clip01(double p) { return std::clamp(p, 0.0, 1.0); }

}  // namespace

nlohmann::json LossWeights::to_json() const {
  return {{"alpha", alpha}, {"beta", beta}, {"gamma", gamma}, {"epsilon", epsilon}};
}

double recon_loss(std::span<const double> x, std::span<const double> r, double alpha) {
  require_same_size(x.size(), r.size(), "recon_loss");
  if (x.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += std::abs(x[i] - r[i]);
  return alpha * sum / static_cast<double>(x.size());
}

double latent_loss(std::span<const double> m, std::span<const double> sigma, double beta) {
  require_same_size(m.size(), sigma.size(), "latent_loss");
  require_positive(sigma);
  double sum = 0.0;
  for (std::size_t l = 0; l < m.size(); ++l)
    sum += m[l] * m[l] + sigma[l] - 1.0 - std::log(sigma[l]);
  return beta * sum;
}

double generator_loss(double p_real_of_r, double gamma, double epsilon) {
  return -gamma * std::log(clip01(p_real_of_r) + epsilon);
}

double discriminator_loss(double p_real_of_r, double p_real_of_x, double epsilon) {
  return -std::log(1.0 - clip01(p_real_of_r) + epsilon) - std::log(clip01(p_real_of_x) + epsilon);
}

LossReport total_generator_loss(std::span<const double> x, std::span<const double> r,
                                std::span<const double> m, std::span<const double> sigma,
                                double p_real_of_r, const LossWeights& w) {
  if (!(w.epsilon > 0.0)) throw RangeError("epsilon must be positive");
  LossReport rep;
  rep.l_r = recon_loss(x, r, w.alpha);
  rep.l_l = latent_loss(m, sigma, w.beta);
  rep.l_g = generator_loss(p_real_of_r, w.gamma, w.epsilon);
  rep.l_total = rep.l_r + rep.l_l + rep.l_g;
  return rep;
}

std::vector<double> recon_loss_grad_r(std::span<const double> x, std::span<const double> r,
                                      double alpha) {
  require_same_size(x.size(), r.size(), "recon_loss_grad_r");
  std::vector<double> g(r.size(), 0.0);
  const double scale = x.empty() ? 0.0 : alpha / static_cast<double>(x.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double d = r[i] - x[i];
    g[i] = d > 0.0 ? scale : (d < 0.0 ? -scale : 0.0);
  }
  return g;
}

LatentGrad latent_loss_grad(std::span<const double> m, std::span<const double> sigma, double beta) {
  require_same_size(m.size(), sigma.size(), "latent_loss_grad");
  require_positive(sigma);
  LatentGrad g{std::vector<double>(m.size()), std::vector<double>(m.size())};
  for (std::size_t l = 0; l < m.size(); ++l) {
    g.d_m[l] = 2.0 * beta * m[l];
    g.d_sigma[l] = beta * (1.0 - 1.0 / sigma[l]);
  }
  return g;
}

double generator_loss_grad(double p_real_of_r, double gamma, double epsilon) {
  return -gamma / (clip01(p_real_of_r) + epsilon);
}

DiscriminatorGrad discriminator_loss_grad(double p_real_of_r, double p_real_of_x, double epsilon) {
  return {1.0 / (1.0 - clip01(p_real_of_r) + epsilon), -1.0 / (clip01(p_real_of_x) + epsilon)};
}

}  // namespace synthvae
