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

#include "synthvae/nn/checkpoint.hpp"

#include <filesystem>
#include <iomanip>
#include <memory>
#include <sstream>

#include <openssl/evp.h>

#include "synthvae/errors.hpp"

namespace synthvae::nn {

namespace {

constexpr const char* kMagic = "synthvae-checkpoint";

void save_module(torch::serialize::OutputArchive& root, const std::string& key,
                 const torch::nn::Module& module) {
  torch::serialize::OutputArchive sub;
  module.save(sub);
  root.write(key, sub);
}

void load_module(torch::serialize::InputArchive& root, const std::string& key,
                 torch::nn::Module& module) {
  torch::serialize::InputArchive sub;
  if (!root.try_read(key, sub)) throw IoError(key, "checkpoint lacks network '" + key + "'");
  module.load(sub);
}

}  // namespace

std::string to_string(ModelKind kind) {
  return kind == ModelKind::kSynthEncoder ? "synth_encoder" : "hybrid";
}

nlohmann::json ModelMeta::to_json() const {
  return {{"format", kMagic},
          {"format_version", kFormatVersion},
          {"kind", to_string(kind)},
          {"schema", schema.to_json()},
          {"image_dims", dims.str()},
          {"architecture", arch.to_json()},
          {"variant", to_string(variant)},
          {"n_da", n_da},
          {"n_r", n_r},
          {"renderer_version", renderer_version},
          {"config", config},
          {"step", step}};
}

ModelMeta ModelMeta::from_json(const nlohmann::json& doc) {
  if (doc.value("format", "") != kMagic) throw Error("not a synthvae checkpoint");
  const int version = doc.value("format_version", 0);
  if (version != kFormatVersion)
    throw Error("unsupported checkpoint format version " + std::to_string(version));
  ModelMeta m;
  const std::string kind = doc.at("kind").get<std::string>();
  if (kind == "synth_encoder") m.kind = ModelKind::kSynthEncoder;
  else if (kind == "hybrid") m.kind = ModelKind::kHybrid;
  else throw Error("unknown checkpoint kind '" + kind + "'");
  m.schema = AttributeSchema::from_json(doc.at("schema"));
  m.dims = ImageDims::parse(doc.at("image_dims").get<std::string>());
  m.arch = ArchConfig::from_json(doc.at("architecture"));
  m.variant = variant_from_string(doc.at("variant").get<std::string>());
  m.n_da = doc.at("n_da").get<int>();
  m.n_r = doc.at("n_r").get<int>();
  m.renderer_version = doc.value("renderer_version", "");
  m.config = doc.value("config", nlohmann::json::object());
  m.step = doc.value("step", std::int64_t{0});
  return m;
}

ConvEncoder make_synth_encoder(ImageDims dims, const ArchConfig& arch, int n_da) {
  return ConvEncoder(dims, arch, n_da, 0, /*zero_init_mean=*/true);
}

ConvEncoder make_real_encoder(const ModelMeta& meta) {
  switch (meta.variant) {
    case Variant::kSynth:
      return ConvEncoder(meta.dims, meta.arch, meta.n_r, meta.n_da + meta.n_r);
    case Variant::kUC:
      return ConvEncoder(meta.dims, meta.arch, meta.n_r, meta.n_r);
    case Variant::kC:
      return ConvEncoder(meta.dims, meta.arch, meta.n_da + meta.n_r, meta.n_da + meta.n_r);
  }
  throw Error("unknown variant");
}

Checkpoint Checkpoint::create(const ModelMeta& meta) {
  Checkpoint c;
  c.meta = meta;
  if (meta.kind == ModelKind::kSynthEncoder) {
    c.synth_encoder = make_synth_encoder(meta.dims, meta.arch, meta.n_da);
    return c;
  }
  if (meta.variant == Variant::kUC && meta.n_da != 0)
    throw ShapeError("UC models have no domain-adapted latents");
  if (meta.variant == Variant::kSynth)
    c.synth_encoder = make_synth_encoder(meta.dims, meta.arch, meta.n_da);
  c.real_encoder = make_real_encoder(meta);
  c.decoder = ConvDecoder(meta.dims, meta.arch, meta.code_length());
  c.discriminator = Discriminator(meta.dims, meta.arch);
  return c;
}

void Checkpoint::save(const std::string& path) const {
  torch::serialize::OutputArchive root;
  root.write("meta", c10::IValue(meta.to_json().dump()));
  if (synth_encoder) save_module(root, "synth_encoder", *synth_encoder);
  if (real_encoder) save_module(root, "real_encoder", *real_encoder);
  if (decoder) save_module(root, "decoder", *decoder);
  if (discriminator) save_module(root, "discriminator", *discriminator);
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  try {
    root.save_to(path);
  } catch (const c10::Error& e) {
    throw IoError(path, e.what_without_backtrace());
  }
}

Checkpoint Checkpoint::load(const std::string& path) {
  if (!std::filesystem::exists(path)) throw IoError(path, "checkpoint not found");
  torch::serialize::InputArchive root;
  try {
    root.load_from(path);
  } catch (const c10::Error& e) {
    throw IoError(path, std::string("unreadable checkpoint: ") + e.what_without_backtrace());
  }
  c10::IValue meta_value;
  if (!root.try_read("meta", meta_value) || !meta_value.isString())
    throw IoError(path, "checkpoint has no metadata");
  ModelMeta meta;
  try {
    meta = ModelMeta::from_json(nlohmann::json::parse(meta_value.toStringRef()));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path, std::string("bad checkpoint metadata: ") + e.what());
  }
  Checkpoint c = create(meta);
  try {
    if (c.synth_encoder) load_module(root, "synth_encoder", *c.synth_encoder);
    if (c.real_encoder) load_module(root, "real_encoder", *c.real_encoder);
    if (c.decoder) load_module(root, "decoder", *c.decoder);
    if (c.discriminator) load_module(root, "discriminator", *c.discriminator);
  } catch (const c10::Error& e) {
    throw IoError(path, std::string("parameter mismatch: ") + e.what_without_backtrace());
  }
  if (c.synth_encoder) c.synth_encoder->eval();
  if (c.real_encoder) c.real_encoder->eval();
  if (c.decoder) c.decoder->eval();
  if (c.discriminator) c.discriminator->eval();
  return c;
}

std::string parameter_hash(const torch::nn::Module& module) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  for (const auto& item : module.named_parameters(/*recurse=*/true)) {
    const auto t = item.value().detach().contiguous().cpu();
    EVP_DigestUpdate(ctx.get(), item.key().data(), item.key().size());
    for (const auto s : t.sizes()) EVP_DigestUpdate(ctx.get(), &s, sizeof s);
    EVP_DigestUpdate(ctx.get(), t.data_ptr(), t.numel() * t.element_size());
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return hex.str();
}

}  // namespace synthvae::nn
