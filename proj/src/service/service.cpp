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

#include "synthvae/service/service.hpp"

#include <openssl/evp.h>

#include <httplib.h>

#include "synthvae/errors.hpp"
#include "synthvae/metrics.hpp"

namespace synthvae::service {

namespace {

using json = nlohmann::json;

constexpr double kDaRange = 1.0;
constexpr double kFreeRange = 5.0;

/// Client-side problem with the request structure.
struct BadRequest : Error {
  using Error::Error;
};

/// Well-formed request that does not fit the loaded model.
struct Unprocessable : Error {
  using Error::Error;
};

std::vector<double> number_array(const json& req, const std::string& key) {
  if (!req.contains(key)) throw BadRequest("missing field '" + key + "'");
  const auto& v = req.at(key);
  if (!v.is_array()) throw BadRequest("'" + key + "' must be an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number()) throw BadRequest("'" + key + "' must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<double> row(const CodeMatrix& m, Eigen::Index i) {
  std::vector<double> out(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(j)] = m(i, j);
  return out;
}

json dims_json(ImageDims d) {
  return {{"height", d.height}, {"width", d.width}, {"channels", d.channels}};
}

}  // namespace

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw RangeError("base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out(3 * text.size() / 4);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw RangeError("invalid base64");
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  // '=' is only legal as trailing padding.
  if (text.find('=') != std::string::npos && text.find('=') < text.size() - pad)
    throw RangeError("invalid base64 padding");
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

Handler::Handler(std::optional<nn::Model> model) : model_(std::move(model)) {}

json Handler::version() const {
  return model_ ? json(model_->meta().schema.version()) : json(nullptr);
}

Response Handler::handle(const std::string& method, const std::string& path,
                         const std::string& body) const {
  Response res;
  try {
    if (method == "GET" && path == "/healthz") {
      res = healthz();
    } else if (method == "GET" && path == "/attributes") {
      if (!model_) throw std::logic_error("unloaded");
      res = attributes();
    } else if (method == "POST" &&
               (path == "/encode" || path == "/decode" || path == "/transform")) {
      if (!model_) throw std::logic_error("unloaded");
      json req;
      try {
        req = json::parse(body);
      } catch (const json::parse_error& e) {
        throw BadRequest(std::string("malformed JSON: ") + e.what());
      }
      if (!req.is_object()) throw BadRequest("request body must be a JSON object");
      if (path == "/encode") res = encode(req);
      else if (path == "/decode") res = decode(req);
      else res = transform(req);
    } else {
      res = {404, {{"error", "no route for " + method + " " + path}}};
    }
  } catch (const std::logic_error&) {
    res = {503, {{"error", "no checkpoint loaded"}}};
  } catch (const BadRequest& e) {
    res = {400, {{"error", e.what()}}};
  } catch (const Unprocessable& e) {
    res = {422, {{"error", e.what()}}};
  } catch (const ShapeError& e) {
    res = {422, {{"error", e.what()}}};
  } catch (const std::exception& e) {
    res = {500, {{"error", e.what()}}};
  }
  if (res.status != 200 && model_ && (res.status == 422)) {
    res.body["expected_dims"] = dims_json(model_->meta().dims);
    res.body["code_length"] = model_->meta().code_length();
  }
  res.body["schema_version"] = version();
  return res;
}

Response Handler::healthz() const {
  json body{{"status", "ok"}, {"loaded", loaded()}};
  if (model_) {
    const auto& m = model_->meta();
    body["kind"] = nn::to_string(m.kind);
    body["variant"] = nn::to_string(m.variant);
    body["step"] = m.step;
    body["image_dims"] = dims_json(m.dims);
  }
  return {200, body};
}

Response Handler::attributes() const {
  const auto& m = model_->meta();
  json da = json::array();
  for (int l = 0; l < m.n_da; ++l) {
    const auto& a = m.schema[static_cast<std::size_t>(l)];
    da.push_back({{"index", l},
                  {"code", a.short_code},
                  {"name", a.name},
                  {"kind", a.kind == AttributeKind::kBinary ? "binary" : "continuous"},
                  {"lo", a.lo},
                  {"hi", a.hi},
                  {"code_lo", -kDaRange},
                  {"code_hi", kDaRange}});
  }
  json free = json::array();
  for (int k = 0; k < m.n_r; ++k) {
    free.push_back({{"index", m.n_da + k}, {"name", "r" + std::to_string(k)}});
  }
  return {200,
          {{"variant", nn::to_string(m.variant)},
           {"n_da", m.n_da},
           {"n_r", m.n_r},
           {"image_dims", dims_json(m.dims)},
           {"attributes", da},
           {"free_latents", free}}};
}

Image Handler::request_image(const json& req) const {
  if (!req.contains("image") || !req.at("image").is_string())
    throw BadRequest("'image' must be a base64 PNG string");
  Image img;
  try {
    img = decode_png(base64_decode(req.at("image").get<std::string>()));
  } catch (const ShapeError&) {
    throw;
  } catch (const Error& e) {
    throw BadRequest(std::string("image payload: ") + e.what());
  }
  if (img.dims != model_->meta().dims)
    throw Unprocessable("image dims " + img.dims.str() + ", model expects " +
                        model_->meta().dims.str());
  return img;
}

Response Handler::encode(const json& req) const {
  const std::vector<Image> one{request_image(req)};
  const auto enc = model_->encode(one);
  return {200, {{"z_da", row(enc.z_da, 0)}, {"z_r_mean", row(enc.z_r_mean, 0)}, {"code", row(enc.code, 0)}}};
}

Response Handler::decode(const json& req) const {
  const auto& m = model_->meta();
  if (!model_->can_decode()) throw Unprocessable("checkpoint has no decoder");
  const auto z_da = number_array(req, "z_da");
  const auto z_r = number_array(req, "z_r");
  if (z_da.size() != static_cast<std::size_t>(m.n_da) || z_r.size() != static_cast<std::size_t>(m.n_r))
    throw Unprocessable("code lengths " + std::to_string(z_da.size()) + "+" +
                        std::to_string(z_r.size()) + ", model expects " + std::to_string(m.n_da) +
                        "+" + std::to_string(m.n_r));
  CodeMatrix code(1, m.code_length());
  for (int l = 0; l < m.n_da; ++l) code(0, l) = z_da[static_cast<std::size_t>(l)];
  for (int k = 0; k < m.n_r; ++k) code(0, m.n_da + k) = z_r[static_cast<std::size_t>(k)];
  const auto img = model_->decode(code).front();
  return {200, {{"image", base64_encode(encode_png(img))}, {"dims", dims_json(img.dims)}}};
}

Response Handler::transform(const json& req) const {
  const auto& m = model_->meta();
  if (!model_->can_decode()) throw Unprocessable("checkpoint has no decoder");
  const Image img = request_image(req);
  std::map<std::size_t, double> edits;
  json flagged = json::array();
  if (req.contains("edits")) {
    const auto& e = req.at("edits");
    if (!e.is_object()) throw BadRequest("'edits' must be an object of name -> code value");
    for (const auto& [key, value] : e.items()) {
      if (!value.is_number()) throw BadRequest("edit '" + key + "' must be a number");
      std::size_t index = 0;
      double range = kDaRange;
      if (key.size() > 1 && key[0] == 'r' &&
          key.find_first_not_of("0123456789", 1) == std::string::npos) {
        const auto k = std::stoul(key.substr(1));
        if (k >= static_cast<std::size_t>(m.n_r))
          throw Unprocessable("free latent '" + key + "' out of range");
        index = static_cast<std::size_t>(m.n_da) + k;
        range = kFreeRange;
      } else {
        const auto found = m.schema.find(key);
        if (!found || *found >= static_cast<std::size_t>(m.n_da))
          throw Unprocessable("unknown domain-adapted latent '" + key + "'");
        index = *found;
      }
      const double v = value.get<double>();
      if (!std::isfinite(v)) throw BadRequest("edit '" + key + "' is not finite");
      if (std::abs(v) > range) flagged.push_back(key);
      edits[index] = v;
    }
  }
  const auto result = synthvae::transform(model_->code_encoder(), model_->decoder(), img, edits);
  return {200,
          {{"image", base64_encode(encode_png(result.image))},
           {"code", result.code},
           {"out_of_range", flagged}}};
}

struct Server::Impl {
  std::shared_ptr<const Handler> handler;
  ServerOptions options;
  httplib::Server http;
  bool bound = false;
};

Server::Server(std::shared_ptr<const Handler> handler, ServerOptions options)
    : impl_(std::make_unique<Impl>()) {
  impl_->handler = std::move(handler);
  impl_->options = std::move(options);
  impl_->http.set_payload_max_length(impl_->options.max_payload);
  auto route = [h = impl_->handler](const httplib::Request& req, httplib::Response& res) {
    const Response out = h->handle(req.method, req.path, req.body);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  };
  impl_->http.Get("/healthz", route);
  impl_->http.Get("/attributes", route);
  impl_->http.Post("/encode", route);
  impl_->http.Post("/decode", route);
  impl_->http.Post("/transform", route);
  impl_->http.set_error_handler([h = impl_->handler](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    const Response out = h->handle(req.method, req.path, "");
    res.set_content(out.body.dump(), "application/json");
  });
}

Server::~Server() { stop(); }

int Server::bind() {
  const auto& o = impl_->options;
  int port = o.port;
  if (port == 0) {
    port = impl_->http.bind_to_any_port(o.host);
  } else if (!impl_->http.bind_to_port(o.host, port)) {
    port = -1;
  }
  if (port <= 0) throw IoError(o.host + ":" + std::to_string(o.port), "cannot bind");
  impl_->bound = true;
  return port;
}

void Server::listen() {
  if (!impl_->bound) bind();
  impl_->http.listen_after_bind();
}

void Server::stop() {
  if (impl_ && impl_->http.is_running()) impl_->http.stop();
}

void Server::wait_until_ready() const { impl_->http.wait_until_ready(); }

}  // namespace synthvae::service
