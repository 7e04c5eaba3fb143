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

#include "synthvae/nn/training.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "synthvae/errors.hpp"
#include "synthvae/nn/regularizers.hpp"
#include "synthvae/nn/tensor_losses.hpp"
#include "synthvae/render.hpp"
#include "synthvae/rng.hpp"

namespace synthvae::nn {

namespace {

/// Epoch-wise shuffled index stream, reproducible from its seed.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::uint64_t seed) : order_(n), rng_(seed) {
    std::iota(order_.begin(), order_.end(), 0);
    shuffle();
  }

  std::vector<std::size_t> next(std::size_t batch) {
    std::vector<std::size_t> out;
    out.reserve(batch);
    while (out.size() < batch) {
      if (pos_ == order_.size()) shuffle();
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  void shuffle() {
    for (std::size_t i = order_.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng_.uniform() * static_cast<double>(i));
      std::swap(order_[i - 1], order_[std::min(j, i - 1)]);
    }
    pos_ = 0;
  }

  std::vector<std::size_t> order_;
  Rng rng_;
  std::size_t pos_ = 0;
};

torch::Tensor label_codes(const Corpus& corpus, const AttributeSchema& schema,
                          std::span<const std::size_t> rows) {
  auto t = torch::empty({static_cast<int64_t>(rows.size()), static_cast<int64_t>(schema.size())});
  float* dst = t.data_ptr<float>();
  for (const std::size_t r : rows) {
    const auto code = to_code(corpus.labels[r], schema);
    dst = std::transform(code.begin(), code.end(), dst, [](double v) { return static_cast<float>(v); });
  }
  return t;
}

double grad_norm(const std::vector<torch::Tensor>& params) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (p.grad().defined()) sq += p.grad().detach().to(torch::kDouble).square().sum().item<double>();
  }
  return std::sqrt(sq);
}

/// Clips in place and verifies the post-clip norm. Returns the pre-clip norm.
double clip_and_check(const std::vector<torch::Tensor>& params, double max_norm) {
  const double before = torch::nn::utils::clip_grad_norm_(params, max_norm);
  const double after = grad_norm(params);
  if (!(after <= max_norm * (1.0 + 1e-4)))
    throw Error("gradient clipping failed: norm " + std::to_string(after) + " > " +
                std::to_string(max_norm));
  return before;
}

void set_lr(torch::optim::Adam& opt, double lr) {
  for (auto& group : opt.param_groups())
    static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
}

void prepare_run(const TrainConfig& config) {
  config.validate();
  if (config.determinism) {
    torch::set_num_threads(1);
    torch::manual_seed(config.seed);
  } else {
    torch::manual_seed(config.seed);
  }
}

void check_corpus(const Corpus& corpus, const std::string& what) {
  if (corpus.size() == 0) throw ConfigError(what, "corpus is empty");
}

std::vector<torch::Tensor> concat_params(std::initializer_list<torch::nn::Module*> modules) {
  std::vector<torch::Tensor> out;
  for (auto* m : modules) {
    const auto p = m->parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

}  // namespace

MetricsSink jsonl_sink(const std::string& path) {
  auto out = std::make_shared<std::ofstream>(path, std::ios::app);
  if (!*out) throw IoError(path, "cannot open metrics log");
  return [out](const nlohmann::json& record) { *out << record.dump() << '\n' << std::flush; };
}

Checkpoint train_synth_encoder(const Corpus& synth, const AttributeSchema& schema,
                               const TrainConfig& config, const MetricsSink& sink) {
  check_corpus(synth, "synthetic corpus");
  if (synth.labels.size() != synth.size())
    throw ConfigError("manifest", "synthetic encoder training needs every row labeled");
  prepare_run(config);

  ModelMeta meta;
  meta.kind = ModelKind::kSynthEncoder;
  meta.schema = schema;
  meta.dims = synth.dims;
  meta.arch = config.arch;
  meta.variant = Variant::kSynth;
  meta.n_da = static_cast<int>(schema.size());
  meta.n_r = 0;
  meta.renderer_version = kRendererVersion;
  meta.config = config.to_json();
  Checkpoint ckpt = Checkpoint::create(meta);
  auto& encoder = ckpt.synth_encoder;
  encoder->train();

  torch::optim::Adam opt(encoder->parameters(), torch::optim::AdamOptions(config.lr0));
  const auto params = encoder->parameters();
  BatchSampler sampler(synth.size(), config.seed ^ 0x5EEDULL);
  at::Generator gen = make_generator(config.seed + 1);

  for (std::int64_t step = 0; step < config.total_steps; ++step) {
    const double lr = lr_schedule(step, config);
    set_lr(opt, lr);
    const auto rows = sampler.next(static_cast<std::size_t>(config.batch_size));
    const auto x = corpus_batch(synth.pixels, synth.dims, rows);
    const auto target = label_codes(synth, schema, rows);
    const auto noisy = equalizing_noise(x, config.equalizing, gen).images;

    opt.zero_grad();
    const auto loss = (encoder->forward(noisy).m - target).abs().mean();
    loss.backward();
    const double norm = clip_and_check(params, config.grad_clip_norm);
    opt.step();

    if (sink && (step % config.log_every == 0 || step + 1 == config.total_steps)) {
      sink({{"stage", 1}, {"step", step}, {"l_r", loss.item<double>()}, {"l_l", 0.0},
            {"l_g", 0.0}, {"l_d", 0.0}, {"lr", lr}, {"grad_norm", norm}});
    }
  }
  encoder->eval();
  ckpt.meta.step = config.total_steps;
  return ckpt;
}

Checkpoint train_hybrid(const Corpus& real, const Checkpoint* synth, const AttributeSchema& schema,
                        const TrainConfig& config, const MetricsSink& sink) {
  check_corpus(real, "real corpus");
  const Variant variant = config.variant;
  if (variant == Variant::kSynth) {
    if (!synth || !synth->synth_encoder)
      throw ConfigError("synth_encoder", "SYNTH variant needs a trained synthetic encoder");
    if (synth->meta.dims != real.dims)
      throw ShapeError("synthetic encoder expects " + synth->meta.dims.str() + ", real corpus is " +
                       real.dims.str());
    if (synth->meta.schema.version() != schema.version())
      throw SchemaError("synthetic encoder schema '" + synth->meta.schema.version() +
                        "' differs from '" + schema.version() + "'");
  }
  if (variant == Variant::kC && real.labels.size() != real.size())
    throw ConfigError("variant", "C variant needs every real image labeled");
  prepare_run(config);

  const int n_attr = static_cast<int>(schema.size());
  ModelMeta meta;
  meta.kind = ModelKind::kHybrid;
  meta.schema = schema;
  meta.dims = real.dims;
  meta.arch = config.arch;
  meta.variant = variant;
  const LatentSplit split = latent_split(config, n_attr);
  meta.n_da = split.n_da;
  meta.n_r = split.n_r;
  meta.renderer_version = synth ? synth->meta.renderer_version : std::string(kRendererVersion);
  meta.config = config.to_json();
  Checkpoint ckpt = Checkpoint::create(meta);
  std::string frozen_hash;
  if (variant == Variant::kSynth) {
    ckpt.synth_encoder = synth->synth_encoder;
    ckpt.synth_encoder->eval();
    for (auto& p : ckpt.synth_encoder->parameters()) p.set_requires_grad(false);
    frozen_hash = parameter_hash(*ckpt.synth_encoder);
    meta.config["synth_encoder_sha256"] = frozen_hash;
  }
  auto& enc = ckpt.real_encoder;
  auto& dec = ckpt.decoder;
  auto& disc = ckpt.discriminator;
  enc->train();
  dec->train();
  disc->train();

  const auto g_params = concat_params({enc.ptr().get(), dec.ptr().get()});
  const auto d_params = disc->parameters();
  torch::optim::Adam g_opt(g_params, torch::optim::AdamOptions(config.lr0));
  torch::optim::Adam d_opt(d_params, torch::optim::AdamOptions(config.lr0));
  BatchSampler sampler(real.size(), config.seed ^ 0x5EEDULL);
  at::Generator gen = make_generator(config.seed + 1);
  const LossWeights& w = config.weights;
  const int64_t n_da = meta.n_da;
  const int64_t n_r = meta.n_r;

  for (std::int64_t step = 0; step < config.total_steps; ++step) {
    const double lr = lr_schedule(step, config);
    set_lr(g_opt, lr);
    set_lr(d_opt, lr);
    const auto rows = sampler.next(static_cast<std::size_t>(config.batch_size));
    const auto x = corpus_batch(real.pixels, real.dims, rows);
    const int64_t n = x.size(0);

    // Encode, sample, decode.
    const auto out = enc->forward(input_noise(x, config.input_noise, gen));
    torch::Tensor m_da, m_r, l_aux = torch::zeros({});
    if (variant == Variant::kSynth) {
      torch::NoGradGuard guard;
      m_da = ckpt.synth_encoder->forward(x).m;
      m_r = out.m;
    } else if (variant == Variant::kC) {
      const auto target = label_codes(real, schema, rows);
      m_da = target;
      l_aux = w.alpha * (out.m.narrow(1, 0, n_da) - target).abs().mean();
      m_r = out.m.narrow(1, n_da, n_r);
    } else {
      m_da = torch::zeros({n, 0});
      m_r = out.m;
    }
    const auto sigma_da = out.sigma.narrow(1, 0, n_da);
    const auto sigma_r = out.sigma.narrow(1, n_da, n_r);
    const auto explored = exploratory_replace(sigma_da, config.exploratory, gen);
    const auto eps = torch::randn({n, n_da + n_r}, gen);
    const auto z_da = m_da + torch::sqrt(explored.sigma) * eps.narrow(1, 0, n_da);
    const auto z_r = m_r + torch::sqrt(sigma_r) * eps.narrow(1, n_da, n_r);
    const auto r = dec->forward(concat_latent(z_da, z_r));

    // Discriminator step.
    d_opt.zero_grad();
    const auto p_fake = disc->forward(input_noise(r.detach(), config.input_noise, gen));
    const auto p_real = disc->forward(input_noise(x, config.input_noise, gen));
    const auto l_d = discriminator_loss(p_fake, p_real, w.epsilon);
    l_d.backward();
    const double d_norm = clip_and_check(d_params, config.grad_clip_norm);
    d_opt.step();

    // Generator-side step against the updated discriminator.
    g_opt.zero_grad();
    const auto l_r = recon_loss(x, r, w.alpha);
    const auto l_l = latent_loss(concat_latent(m_da, m_r), out.sigma, w.beta);
    const auto l_g = generator_loss(disc->forward(input_noise(r, config.input_noise, gen)),
                                    w.gamma, w.epsilon);
    const auto l_total = l_r + l_l + l_g;
    (l_total + l_aux).backward();
    // The discriminator only scores here; its gradients belong to the next D step.
    d_opt.zero_grad();
    const double g_norm = clip_and_check(g_params, config.grad_clip_norm);
    g_opt.step();

    if (sink && (step % config.log_every == 0 || step + 1 == config.total_steps)) {
      nlohmann::json rec{{"stage", 2},
                         {"step", step},
                         {"l_r", l_r.item<double>()},
                         {"l_l", l_l.item<double>()},
                         {"l_g", l_g.item<double>()},
                         {"l_total", l_total.item<double>()},
                         {"l_d", l_d.item<double>()},
                         {"lr", lr},
                         {"grad_norm_g", g_norm},
                         {"grad_norm_d", d_norm},
                         {"explored", explored.replaced.sum().item<int64_t>()}};
      if (variant == Variant::kC) rec["l_aux"] = l_aux.item<double>();
      sink(rec);
    }
  }

  enc->eval();
  dec->eval();
  disc->eval();
  if (variant == Variant::kSynth && parameter_hash(*ckpt.synth_encoder) != frozen_hash)
    throw Error("synthetic encoder parameters changed during hybrid training");
  ckpt.meta = meta;
  ckpt.meta.step = config.total_steps;
  return ckpt;
}

}  // namespace synthvae::nn
