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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "support/stats.hpp"
#include "synthvae/errors.hpp"
#include "synthvae/losses.hpp"

namespace synthvae {
namespace {

using testing::central_difference;
using testing::relative_error;

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

TEST(ReconLoss, Examples) {
  const std::vector<double> x{1.0, 0.0}, r{0.0, 0.0};
  EXPECT_DOUBLE_EQ(recon_loss(x, r, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(recon_loss(x, x, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(recon_loss(x, r, 2.0), 2.0 * recon_loss(x, r, 1.0));
  EXPECT_THROW(recon_loss(x, std::vector<double>{0.0}, 1.0), ShapeError);
}

TEST(LatentLoss, Examples) {
  EXPECT_DOUBLE_EQ(latent_loss(std::vector<double>(5, 0.0), std::vector<double>(5, 1.0), 8.0), 0.0);
  EXPECT_DOUBLE_EQ(latent_loss(std::vector<double>{1.0}, std::vector<double>{1.0}, 1.0), 1.0);
  // 8 * ((2 - 1 - ln 2) + (0.5 - 1 - ln 0.5)) = 8 * 0.5
  EXPECT_NEAR(latent_loss(std::vector<double>{0.0, 0.0}, std::vector<double>{2.0, 0.5}, 8.0), 4.0,
              1e-12);
  EXPECT_THROW(latent_loss(std::vector<double>{0.0}, std::vector<double>{0.0}, 1.0), RangeError);
  EXPECT_THROW(latent_loss(std::vector<double>{0.0}, std::vector<double>{-1.0}, 1.0), RangeError);
}

TEST(LatentLoss, NonNegativeOverLogUniformSigma) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> exponent(-3.0, 3.0);
  for (int i = 0; i < 20000; ++i) {
    const double sigma = std::pow(10.0, exponent(rng));
    const double v = latent_loss(std::vector<double>{0.0}, std::vector<double>{sigma}, 1.0);
    EXPECT_GE(v, 0.0) << sigma;
    if (std::abs(sigma - 1.0) > 1e-3) EXPECT_GT(v, 0.0) << sigma;
  }
}

TEST(GeneratorLoss, Examples) {
  EXPECT_NEAR(generator_loss(std::exp(-1.0), 1.0, 0.0), 1.0, 1e-15);
  EXPECT_EQ(generator_loss(0.3, 0.0, 1e-8), 0.0);
  EXPECT_NEAR(generator_loss(1.0, 0.03, 1e-8), 0.0, 1e-9);
}

TEST(DiscriminatorLoss, Examples) {
  EXPECT_NEAR(discriminator_loss(0.5, 0.5, 0.0), 2.0 * std::log(2.0), 1e-15);
  EXPECT_NEAR(discriminator_loss(1e-12, 1.0 - 1e-12, 1e-8), 0.0, 1e-7);
  double previous = -1.0;
  for (double p = 0.0; p <= 1.0; p += 0.05) {
    const double v = discriminator_loss(p, 0.7, 1e-8);
    EXPECT_GT(v, previous);
    previous = v;
  }
}

TEST(Losses, EpsilonStableAtSaturatedOutputs) {
  for (const double pr : {0.0, 1.0, -0.5, 1.5}) {
    for (const double px : {0.0, 1.0, -0.5, 1.5}) {
      EXPECT_TRUE(std::isfinite(discriminator_loss(pr, px, 1e-8)));
      const auto g = discriminator_loss_grad(pr, px, 1e-8);
      EXPECT_TRUE(std::isfinite(g.d_p_r) && std::isfinite(g.d_p_x));
    }
    EXPECT_TRUE(std::isfinite(generator_loss(pr, 0.03, 1e-8)));
    EXPECT_TRUE(std::isfinite(generator_loss_grad(pr, 0.03, 1e-8)));
  }
}

TEST(TotalGeneratorLoss, MinimumAndSumIdentity) {
  const std::vector<double> x{0.1, -0.2, 0.3};
  const auto zero = total_generator_loss(x, x, std::vector<double>(4, 0.0),
                                         std::vector<double>(4, 1.0), 1.0, LossWeights{});
  EXPECT_NEAR(zero.l_total, 0.0, 1e-9);

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto xs = random_vector(rng, 8, -1, 1);
    const auto rs = random_vector(rng, 8, -1, 1);
    const auto m = random_vector(rng, 8, -2, 2);
    const auto s = random_vector(rng, 8, 0.05, 3);
    const double p = std::uniform_real_distribution<double>(0.01, 0.99)(rng);
    const LossWeights w{};
    const auto rep = total_generator_loss(xs, rs, m, s, p, w);
    EXPECT_EQ(rep.l_total, rep.l_r + rep.l_l + rep.l_g);

    // Independent re-evaluation straight from the formulas.
    double l1 = 0.0, kl = 0.0;
    for (std::size_t i = 0; i < 8; ++i) {
      l1 += std::fabs(xs[i] - rs[i]);
      kl += m[i] * m[i] + s[i] - 1.0 - std::log(s[i]);
    }
    EXPECT_NEAR(rep.l_r, w.alpha * l1 / 8.0, 1e-12);
    EXPECT_NEAR(rep.l_l, w.beta * kl, 1e-12);
    EXPECT_NEAR(rep.l_g, -w.gamma * std::log(p + w.epsilon), 1e-12);
  }
}

TEST(LossGradients, MatchCentralDifferences) {
  std::mt19937_64 rng(21);
  const double h = 1e-4;
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_vector(rng, 8, -1, 1);
    // Keep |x - r| away from the kink of |.| so the difference is smooth.
    auto r = random_vector(rng, 8, -1, 1);
    for (std::size_t i = 0; i < 8; ++i)
      if (std::abs(x[i] - r[i]) < 10 * h) r[i] += 20 * h;
    const auto g_r = recon_loss_grad_r(x, r, 1.7);
    for (std::size_t i = 0; i < 8; ++i) {
      const double fd = central_difference(
          [&](const std::vector<double>& v) { return recon_loss(x, v, 1.7); }, r, i, h);
      EXPECT_LT(relative_error(g_r[i], fd), 1e-4);
    }

    const auto m = random_vector(rng, 8, -2, 2);
    const auto s = random_vector(rng, 8, 0.2, 3);
    const auto g = latent_loss_grad(m, s, 8.0);
    for (std::size_t i = 0; i < 8; ++i) {
      const double fd_m = central_difference(
          [&](const std::vector<double>& v) { return latent_loss(v, s, 8.0); }, m, i, h);
      const double fd_s = central_difference(
          [&](const std::vector<double>& v) { return latent_loss(m, v, 8.0); }, s, i, h);
      EXPECT_LT(relative_error(g.d_m[i], fd_m), 1e-4);
      EXPECT_LT(relative_error(g.d_sigma[i], fd_s), 1e-4);
    }

    const double pr = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
    const double px = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
    const auto scalar = [](auto f) {
      return [f](const std::vector<double>& v) { return f(v[0]); };
    };
    const double fd_g = central_difference(
        scalar([](double p) { return generator_loss(p, 0.03, 1e-8); }), {pr}, 0, h);
    EXPECT_LT(relative_error(generator_loss_grad(pr, 0.03, 1e-8), fd_g), 1e-4);
    const auto gd = discriminator_loss_grad(pr, px, 1e-8);
    const double fd_dr = central_difference(
        scalar([px](double p) { return discriminator_loss(p, px, 1e-8); }), {pr}, 0, h);
    const double fd_dx = central_difference(
        scalar([pr](double p) { return discriminator_loss(pr, p, 1e-8); }), {px}, 0, h);
    EXPECT_LT(relative_error(gd.d_p_r, fd_dr), 1e-4);
    EXPECT_LT(relative_error(gd.d_p_x, fd_dx), 1e-4);
  }
}

TEST(LossWeights, DefaultsAndJson) {
  const LossWeights w;
  EXPECT_EQ(w.alpha, 1.0);
  EXPECT_EQ(w.beta, 8.0);
  EXPECT_EQ(w.gamma, 0.03);
  EXPECT_EQ(w.epsilon, 1e-8);
  const auto j = w.to_json();
  EXPECT_EQ(j.at("beta").get<double>(), 8.0);
}

}  // namespace
}  // namespace synthvae
