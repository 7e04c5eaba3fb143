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

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "synthvae/nn/model.hpp"

namespace synthvae::service {

/// Standard base64 with padding.
std::string base64_encode(const std::vector<std::uint8_t>& bytes);
/// Throws RangeError on characters outside the alphabet or bad padding.
std::vector<std::uint8_t> base64_decode(const std::string& text);

struct Response {
  int status = 200;
  nlohmann::json body;
};

/// Transport-free request handling over an immutable model. Every body,
/// including errors, carries "schema_version" (null without a model).
///
///   GET  /healthz
///   GET  /attributes
///   POST /encode     {"image": b64 png}            -> {z_da, z_r_mean, code}
///   POST /decode     {"z_da": [...], "z_r": [...]} -> {image, dims}
///   POST /transform  {"image": b64 png, "edits": {name: value}}
///                                                  -> {image, code, out_of_range}
///
/// Edit keys name a domain-adapted latent by attribute short code or name, or
/// a free latent as "r<k>". Values are code units; values outside the usual
/// range ([-1, 1] domain-adapted, [-5, 5] free) are applied and listed in
/// "out_of_range".
class Handler {
 public:
  explicit Handler(std::optional<nn::Model> model);

  Response handle(const std::string& method, const std::string& path,
                  const std::string& body) const;
  bool loaded() const { return model_.has_value(); }

 private:
  Response healthz() const;
  Response attributes() const;
  Response encode(const nlohmann::json& req) const;
  Response decode(const nlohmann::json& req) const;
  Response transform(const nlohmann::json& req) const;
  Image request_image(const nlohmann::json& req) const;
  nlohmann::json version() const;

  std::optional<nn::Model> model_;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::size_t max_payload = 32u << 20;
};

/// HTTP front end for a Handler.
class Server {
 public:
  Server(std::shared_ptr<const Handler> handler, ServerOptions options = {});
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and returns the bound port. Throws IoError on failure.
  int bind();
  /// Serves until stop(); call after bind().
  void listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace synthvae::service
