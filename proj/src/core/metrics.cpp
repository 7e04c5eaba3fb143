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

#include "synthvae/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "synthvae/errors.hpp"
#include "synthvae/rng.hpp"

namespace synthvae {

namespace {

nlohmann::json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

CodeStats code_stats(const CodeMatrix& codes, std::size_t min_count) {
  const auto n = static_cast<std::size_t>(codes.rows());
  if (n < std::max<std::size_t>(min_count, 2))
    throw ShapeError("code_stats needs at least " + std::to_string(std::max<std::size_t>(min_count, 2)) +
                     " samples, got " + std::to_string(n));
  CodeStats stats;
  stats.count = n;
  stats.sigma.resize(static_cast<std::size_t>(codes.cols()));
  for (Eigen::Index l = 0; l < codes.cols(); ++l) {
    double mean = 0.0, m2 = 0.0;
    for (Eigen::Index i = 0; i < codes.rows(); ++i) {
      const double x = codes(i, l);
      const double delta = x - mean;
      mean += delta / static_cast<double>(i + 1);
      m2 += delta * (x - mean);
    }
    stats.sigma[static_cast<std::size_t>(l)] = std::sqrt(std::max(0.0, m2) / static_cast<double>(n - 1));
  }
  return stats;
}

CodeStats code_stats(std::span<const Image> images, const EncodeFn& encode, std::size_t min_count) {
  return code_stats(encode(images), min_count);
}

std::vector<std::pair<std::size_t, double>> DeltaResult::sorted_magnitudes() const {
  std::vector<std::pair<std::size_t, double>> out;
  for (std::size_t l = 0; l < delta_prime.size(); ++l) out.emplace_back(l, std::abs(delta_prime[l]));
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

nlohmann::json DeltaResult::to_json() const {
  nlohmann::json sorted = nlohmann::json::array();
  for (const auto& [l, v] : sorted_magnitudes()) sorted.push_back({{"index", l}, {"abs_delta_prime", v}});
  return {{"pairs", pairs},
          {"delta", delta},
          {"delta_prime", delta_prime},
          {"excluded", excluded},
          {"sorted", sorted},
          {"contrast_ratio", delta_prime.size() >= 2 ? finite_or_string(contrast_ratio(*this))
                                                     : nlohmann::json(nullptr)}};
}

DeltaResult pair_delta(const CodeMatrix& positive, const CodeMatrix& negative,
                       const CodeStats& stats) {
  if (positive.rows() != negative.rows() || positive.cols() != negative.cols())
    throw ShapeError("pair_delta: positive and negative code shapes differ");
  if (positive.rows() < 1) throw ShapeError("pair_delta: need at least one pair");
  if (static_cast<std::size_t>(positive.cols()) != stats.sigma.size())
    throw ShapeError("pair_delta: code length does not match code stats");
  const auto n_latent = static_cast<std::size_t>(positive.cols());
  const auto n_pairs = static_cast<double>(positive.rows());
  DeltaResult out;
  out.pairs = static_cast<std::size_t>(positive.rows());
  out.delta.assign(n_latent, 0.0);
  out.delta_prime.assign(n_latent, 0.0);
  for (std::size_t l = 0; l < n_latent; ++l) {
    if (!(stats.sigma[l] > 0.0)) {
      out.excluded.push_back(l);
      continue;
    }
    const auto col = static_cast<Eigen::Index>(l);
    const double sum = (positive.col(col) - negative.col(col)).sum();
    out.delta[l] = sum / (stats.sigma[l] * n_pairs);
  }
  double max_delta = -std::numeric_limits<double>::infinity();
  double max_abs = 0.0;
  for (std::size_t l = 0; l < n_latent; ++l) {
    if (std::find(out.excluded.begin(), out.excluded.end(), l) != out.excluded.end()) continue;
    max_delta = std::max(max_delta, out.delta[l]);
    max_abs = std::max(max_abs, std::abs(out.delta[l]));
  }
  const double norm = max_delta > 0.0 ? max_delta : max_abs;
  if (norm > 0.0) {
    for (std::size_t l = 0; l < n_latent; ++l) out.delta_prime[l] = out.delta[l] / norm;
  }
  return out;
}

DeltaResult pair_delta(const PairSet& pairs, const EncodeFn& encode, const CodeStats& stats) {
  if (pairs.positive.size() != pairs.negative.size())
    throw ShapeError("pair set has unequal positive/negative counts");
  for (std::size_t i = 0; i < pairs.positive.size(); ++i) {
    if (pairs.positive[i].dims != pairs.negative[i].dims)
      throw ShapeError("pair " + std::to_string(i) + " has mismatched image dims");
  }
  return pair_delta(encode(pairs.positive), encode(pairs.negative), stats);
}

double contrast_ratio(const DeltaResult& d) {
  if (d.delta_prime.size() < 2) throw ShapeError("contrast_ratio needs at least 2 latents");
  const auto sorted = d.sorted_magnitudes();
  const double second = sorted[1].second;
  if (second == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / second;
}

nlohmann::json CorrelationMatrix::to_json() const {
  std::vector<std::size_t> flagged;
  for (std::size_t l = 0; l < constant.size(); ++l)
    if (constant[l]) flagged.push_back(l);
  return {{"top", top},
          {"top_block", matrix_json(top_block)},
          {"avg_abs_offdiag", avg_abs_offdiag},
          {"constant", flagged},
          {"full", matrix_json(full)}};
}

CorrelationMatrix sequence_correlation(const CodeMatrix& traj, std::size_t top_k) {
  const Eigen::Index frames = traj.rows();
  const Eigen::Index n = traj.cols();
  if (frames < 3) throw ShapeError("sequence_correlation needs at least 3 frames");
  CorrelationMatrix out;
  const Eigen::RowVectorXd mean = traj.colwise().mean();
  const Eigen::MatrixXd centered = traj.rowwise() - mean;
  Eigen::VectorXd ss(n);
  out.constant.assign(static_cast<std::size_t>(n), false);
  for (Eigen::Index l = 0; l < n; ++l) {
    ss(l) = centered.col(l).squaredNorm();
    out.constant[static_cast<std::size_t>(l)] = !(ss(l) > 0.0);
  }
  out.full = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a + 1; b < n; ++b) {
      double r = 0.0;
      if (ss(a) > 0.0 && ss(b) > 0.0) {
        r = centered.col(a).dot(centered.col(b)) / std::sqrt(ss(a) * ss(b));
        r = std::clamp(r, -1.0, 1.0);
      }
      out.full(a, b) = out.full(b, a) = r;
    }
  }

  std::vector<std::size_t> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return ss(static_cast<Eigen::Index>(a)) > ss(static_cast<Eigen::Index>(b));
  });
  idx.resize(std::min<std::size_t>(top_k, idx.size()));
  out.top = idx;
  const auto k = static_cast<Eigen::Index>(idx.size());
  out.top_block.resize(k, k);
  double sum = 0.0;
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) {
      out.top_block(a, b) = out.full(static_cast<Eigen::Index>(idx[a]), static_cast<Eigen::Index>(idx[b]));
      if (a != b) sum += std::abs(out.top_block(a, b));
    }
  }
  out.avg_abs_offdiag = k > 1 ? sum / static_cast<double>(k * (k - 1)) : 0.0;
  return out;
}

CorrelationMatrix sequence_correlation(std::span<const Image> frames, const EncodeFn& encode,
                                       std::size_t top_k) {
  return sequence_correlation(encode(frames), top_k);
}

std::vector<Image> latent_traversal(const DecodeFn& decode, std::span<const double> base,
                                    std::size_t l, std::span<const double> values) {
  if (l >= base.size()) throw ShapeError("traversal index out of range");
  if (values.empty()) return {};
  CodeMatrix codes(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(base.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (std::size_t j = 0; j < base.size(); ++j)
      codes(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = base[j];
    codes(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) = values[i];
  }
  return decode(codes);
}

double pixel_l2(const Image& a, const Image& b) {
  if (a.dims != b.dims) throw ShapeError("pixel_l2: dims differ");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = static_cast<double>(a.pixels[i]) - b.pixels[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

OrderingResult attribute_ordering(const DecodeFn& decode, std::size_t code_length,
                                  double range_lo, double range_hi) {
  const auto n = static_cast<Eigen::Index>(code_length);
  CodeMatrix codes = CodeMatrix::Zero(2 * n, n);
  for (Eigen::Index l = 0; l < n; ++l) {
    codes(2 * l, l) = range_hi;
    codes(2 * l + 1, l) = range_lo;
  }
  const auto images = decode(codes);
  OrderingResult out;
  out.distance.resize(code_length);
  for (std::size_t l = 0; l < code_length; ++l)
    out.distance[l] = pixel_l2(images[2 * l], images[2 * l + 1]);
  out.order.resize(code_length);
  std::iota(out.order.begin(), out.order.end(), 0);
  std::stable_sort(out.order.begin(), out.order.end(),
                   [&](std::size_t a, std::size_t b) { return out.distance[a] > out.distance[b]; });
  return out;
}

GeneratedBatch generate(const DecodeFn& decode, std::size_t n_da, std::size_t n_r,
                        const std::map<std::size_t, double>& conditioned, std::size_t n,
                        std::uint64_t seed) {
  const std::size_t len = n_da + n_r;
  for (const auto& [l, v] : conditioned) {
    if (l >= n_da) throw ShapeError("conditioned index " + std::to_string(l) + " is not a domain-adapted latent");
  }
  GeneratedBatch out;
  out.codes.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(len));
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < len; ++l) {
      // Draw every component so the stream does not depend on the condition set.
      const double draw = l < n_da ? rng.uniform(-1.0, 1.0) : rng.normal();
      const auto it = conditioned.find(l);
      out.codes(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) =
          it != conditioned.end() ? it->second : draw;
    }
  }
  if (n > 0) out.images = decode(out.codes);
  return out;
}

TransformResult transform(const EncodeFn& encode, const DecodeFn& decode, const Image& x,
                          const std::map<std::size_t, double>& edits) {
  CodeMatrix code = encode(std::span<const Image>(&x, 1));
  for (const auto& [l, v] : edits) {
    if (static_cast<Eigen::Index>(l) >= code.cols())
      throw ShapeError("edit index " + std::to_string(l) + " out of range");
    code(0, static_cast<Eigen::Index>(l)) = v;
  }
  TransformResult out;
  out.code.assign(code.data(), code.data() + code.cols());
  out.image = decode(code).front();
  return out;
}

Image trajectory_brightness_map(const CodeMatrix& traj, std::span<const std::size_t> rows) {
  const int frames = static_cast<int>(traj.rows());
  Image img(ImageDims{static_cast<int>(rows.size()), frames, 1});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int f = 0; f < frames; ++f) {
      const double v = std::clamp(traj(f, static_cast<Eigen::Index>(rows[r])), -5.0, 5.0);
      img.at(static_cast<int>(r), f, 0) = static_cast<float>(v / 5.0);
    }
  }
  return img;
}

}  // namespace synthvae
