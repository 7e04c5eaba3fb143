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

#include "synthvae/errors.hpp"
#include "synthvae/nn/networks.hpp"
#include "synthvae/nn/tensor_losses.hpp"

namespace synthvae::nn {
namespace {

const ImageDims kDims{16, 16, 3};
const ArchConfig kArch{2, 8, 32};

class Networks : public ::testing::Test {
 protected:
  void SetUp() override { torch::manual_seed(3); }
};

TEST_F(Networks, UntrainedSynthEncoderIsZero) {
  ConvEncoder enc(kDims, kArch, 5, 0, /*zero_init_mean=*/true);
  const auto out = enc->forward(torch::rand({4, 3, 16, 16}) * 2 - 1);
  EXPECT_EQ(out.m.sizes(), (std::vector<int64_t>{4, 5}));
  EXPECT_EQ(out.m.abs().max().item<float>(), 0.0f);
  EXPECT_FALSE(out.sigma.defined());
}

TEST_F(Networks, BatchedEncodeOfRepeatedImageGivesEqualRows) {
  ConvEncoder enc(kDims, kArch, 5, 5);
  enc->eval();
  torch::NoGradGuard guard;
  const auto x = torch::rand({1, 3, 16, 16});
  const auto out = enc->forward(torch::cat({x, x}));
  EXPECT_TRUE(torch::equal(out.m[0], out.m[1]));
  EXPECT_TRUE(torch::equal(out.sigma[0], out.sigma[1]));
}

TEST_F(Networks, SigmaPositiveAndShapes) {
  ConvEncoder enc(kDims, kArch, 4, 7);
  torch::NoGradGuard guard;
  const auto out = enc->forward(torch::randn({1000, 3, 16, 16}) * 3);
  EXPECT_EQ(out.m.size(1), 4);
  EXPECT_EQ(out.sigma.size(1), 7);
  EXPECT_GT(out.sigma.min().item<float>(), 0.0f);
  const double mean = out.sigma.mean().item<double>();
  const double var = out.sigma.var().item<double>();
  EXPECT_TRUE(std::isfinite(mean) && std::isfinite(var));
  // Softplus bias puts an untrained network near unit variance.
  EXPECT_NEAR(mean, 1.0, 0.5);
}

TEST_F(Networks, Reparameterize) {
  EncoderOutput out{torch::randn({3, 4}), torch::rand({3, 4}) + 0.1};
  EXPECT_TRUE(torch::equal(reparameterize(out, torch::zeros({3, 4})), out.m));
  const auto eps = torch::randn({3, 4});
  EXPECT_TRUE(torch::allclose(reparameterize({torch::zeros({3, 4}), torch::ones({3, 4})}, eps), eps));
  EXPECT_THROW(reparameterize(out, torch::zeros({3, 5})), ShapeError);

  // sigma is a variance: 10k samples reproduce it within 5%.
  const auto sigma = torch::full({10000, 1}, 2.5, torch::kDouble);
  const auto s = reparameterize({torch::zeros({10000, 1}, torch::kDouble), sigma},
                                torch::randn({10000, 1}, torch::kDouble));
  EXPECT_NEAR(s.var().item<double>(), 2.5, 0.05 * 2.5);
}

TEST_F(Networks, ConcatSplitRoundTrip) {
  const auto a = torch::randn({5, 3}), b = torch::randn({5, 4});
  const auto z = concat_latent(a, b);
  EXPECT_EQ(z.size(1), 7);
  const auto [a2, b2] = split_latent(z, 3);
  EXPECT_TRUE(torch::equal(a, a2));
  EXPECT_TRUE(torch::equal(b, b2));
  EXPECT_TRUE(torch::equal(concat_latent(a, torch::zeros({5, 0})), a));
  EXPECT_THROW(split_latent(z, 8), ShapeError);
}

TEST_F(Networks, DecoderBoundedDeterministicAndShapeClosed) {
  ConvDecoder dec(kDims, kArch, 9);
  dec->eval();
  torch::NoGradGuard guard;
  const auto z = torch::randn({1000, 9}) * 5;
  const auto r = dec->forward(z);
  EXPECT_EQ(r.sizes(), (std::vector<int64_t>{1000, 3, 16, 16}));
  EXPECT_GE(r.min().item<float>(), -1.0f);
  EXPECT_LE(r.max().item<float>(), 1.0f);
  EXPECT_TRUE(torch::equal(r, dec->forward(z)));

  ConvEncoder enc(kDims, kArch, 4, 9);
  ConvEncoder es(kDims, kArch, 5, 0, true);
  const auto x = torch::rand({2, 3, 16, 16});
  const auto code = concat_latent(es->forward(x).m, enc->forward(x).m);
  EXPECT_EQ(dec->forward(code).sizes(), x.sizes());
}

TEST_F(Networks, DiscriminatorInOpenUnitInterval) {
  Discriminator d(kDims, kArch);
  torch::NoGradGuard guard;
  const auto p = d->forward(torch::randn({500, 3, 16, 16}));
  EXPECT_EQ(p.sizes(), (std::vector<int64_t>{500}));
  EXPECT_GT(p.min().item<float>(), 0.0f);
  EXPECT_LT(p.max().item<float>(), 1.0f);
}

TEST_F(Networks, RejectsIndivisibleDims) {
  EXPECT_THROW(ConvEncoder(ImageDims{18, 16, 3}, kArch, 2, 0), ShapeError);
  EXPECT_THROW(ConvDecoder(ImageDims{16, 20, 3}, ArchConfig{3, 8, 32}, 2), ShapeError);
}

// Autograd of a scalar reduction against central differences, in double
// precision, for each network type.
TEST_F(Networks, GradientsMatchFiniteDifferences) {
  const ImageDims tiny{4, 4, 1};
  const ArchConfig arch{1, 2, 2};
  ConvEncoder enc(tiny, arch, 2, 2);
  ConvDecoder dec(tiny, arch, 3);
  Discriminator disc(tiny, arch);
  enc->to(torch::kDouble);
  dec->to(torch::kDouble);
  disc->to(torch::kDouble);
  const auto x = torch::rand({2, 1, 4, 4}, torch::kDouble);
  const auto z = torch::randn({2, 3}, torch::kDouble);

  auto check = [](torch::nn::Module& module, const std::function<torch::Tensor()>& f) {
    for (auto& p : module.parameters()) {
      if (p.grad().defined()) p.mutable_grad().zero_();
    }
    f().backward();
    const double h = 1e-6;
    int checked = 0;
    for (auto& p : module.parameters()) {
      auto flat = p.detach().view(-1);
      const auto grad = p.grad().view(-1);
      for (int64_t i = 0; i < flat.numel() && i < 6; ++i) {
        torch::NoGradGuard guard;
        const double orig = flat[i].item<double>();
        flat[i] = orig + h;
        const double fp = f().item<double>();
        flat[i] = orig - h;
        const double fm = f().item<double>();
        flat[i] = orig;
        const double fd = (fp - fm) / (2 * h);
        const double an = grad[i].item<double>();
        const double scale = std::max({std::abs(fd), std::abs(an), 1e-6});
        EXPECT_LT(std::abs(fd - an) / scale, 1e-3) << "param element " << i;
        ++checked;
      }
    }
    EXPECT_GT(checked, 0);
  };
  check(*enc, [&] {
    const auto o = enc->forward(x);
    return o.m.square().sum() + o.sigma.log().sum();
  });
  check(*dec, [&] { return dec->forward(z).sum(); });
  check(*disc, [&] { return torch::log(disc->forward(x)).sum(); });
}

TEST(TensorLosses, MatchScalarVersions) {
  torch::manual_seed(4);
  const auto x = torch::rand({3, 8}, torch::kDouble) * 2 - 1;
  const auto r = torch::rand({3, 8}, torch::kDouble) * 2 - 1;
  const auto m = torch::randn({3, 5}, torch::kDouble);
  const auto s = torch::rand({3, 5}, torch::kDouble) + 0.1;
  const auto pr = torch::rand({3}, torch::kDouble);
  const auto px = torch::rand({3}, torch::kDouble);
  double lr = 0, ll = 0, lg = 0, ld = 0;
  auto row = [](const torch::Tensor& t, int64_t i) {
    const auto c = t[i].contiguous();
    return std::vector<double>(c.data_ptr<double>(), c.data_ptr<double>() + c.numel());
  };
  for (int64_t i = 0; i < 3; ++i) {
    lr += synthvae::recon_loss(row(x, i), row(r, i), 1.5) / 3;
    ll += synthvae::latent_loss(row(m, i), row(s, i), 8.0) / 3;
    lg += synthvae::generator_loss(pr[i].item<double>(), 0.03, 1e-8) / 3;
    ld += synthvae::discriminator_loss(pr[i].item<double>(), px[i].item<double>(), 1e-8) / 3;
  }
  EXPECT_NEAR(recon_loss(x, r, 1.5).item<double>(), lr, 1e-12);
  EXPECT_NEAR(latent_loss(m, s, 8.0).item<double>(), ll, 1e-12);
  EXPECT_NEAR(generator_loss(pr, 0.03, 1e-8).item<double>(), lg, 1e-12);
  EXPECT_NEAR(discriminator_loss(pr, px, 1e-8).item<double>(), ld, 1e-12);
  // Saturated outputs stay finite.
  const auto sat = torch::tensor({0.0, 1.0}, torch::kDouble);
  EXPECT_TRUE(std::isfinite(discriminator_loss(sat, sat, 1e-8).item<double>()));
  EXPECT_TRUE(std::isfinite(generator_loss(sat, 0.03, 1e-8).item<double>()));
}

TEST(ImageTensors, RoundTrip) {
  Image a(ImageDims{2, 3, 3});
  for (std::size_t i = 0; i < a.pixels.size(); ++i) a.pixels[i] = static_cast<float>(i) / 20.0f - 0.4f;
  const auto t = to_tensor(a);
  EXPECT_EQ(t.sizes(), (std::vector<int64_t>{1, 3, 2, 3}));
  EXPECT_FLOAT_EQ(t[0][1][1][2].item<float>(), a.at(1, 2, 1));
  EXPECT_EQ(to_images(t).front(), a);
  const std::vector<std::uint8_t> levels{0, 255, 128, 1, 2, 3};
  const auto b = corpus_batch(levels, ImageDims{1, 2, 3}, std::vector<std::size_t>{0});
  EXPECT_FLOAT_EQ(b[0][0][0][0].item<float>(), -1.0f);
  EXPECT_FLOAT_EQ(b[0][1][0][0].item<float>(), 1.0f);
}

}  // namespace
}  // namespace synthvae::nn
