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

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "synthvae/image.hpp"

namespace synthvae {

/// Rows are samples (images or frames), columns are latent components.
using CodeMatrix = Eigen::MatrixXd;

/// Maps a batch of images to their mean codes (no sampling), one row each.
using EncodeFn = std::function<CodeMatrix(std::span<const Image>)>;
/// Maps a batch of codes (one per row) to images.
using DecodeFn = std::function<std::vector<Image>(const CodeMatrix&)>;

struct CodeStats {
  std::vector<double> sigma;  // per-latent sample standard deviation
  std::size_t count = 0;
};

/// One-pass (Welford) per-column sample std. Requires at least `min_count` rows.
CodeStats code_stats(const CodeMatrix& codes, std::size_t min_count = 100);
CodeStats code_stats(std::span<const Image> images, const EncodeFn& encode,
                     std::size_t min_count = 100);

struct PairSet {
  std::vector<Image> positive;
  std::vector<Image> negative;
};

struct DeltaResult {
  std::vector<double> delta;
  std::vector<double> delta_prime;
  std::vector<std::size_t> excluded;  // latents with zero code std
  std::size_t pairs = 0;

  /// (latent index, |delta'|) sorted by decreasing magnitude.
  std::vector<std::pair<std::size_t, double>> sorted_magnitudes() const;
  nlohmann::json to_json() const;
};

/// delta(l) = sum_P (pos(l) - neg(l)) / (sigma_z(l) N_P);
/// delta'(l) = delta(l) / max_l delta(l).
/// When no delta is positive the vector is scaled by max |delta| instead (all
/// zeros stay zero). Latents with sigma_z(l) == 0 are excluded and reported.
DeltaResult pair_delta(const CodeMatrix& positive, const CodeMatrix& negative,
                       const CodeStats& stats);
DeltaResult pair_delta(const PairSet& pairs, const EncodeFn& encode, const CodeStats& stats);

/// 1 / (second-largest |delta'|). Infinity when every other |delta'| is zero.
double contrast_ratio(const DeltaResult& d);

struct CorrelationMatrix {
  Eigen::MatrixXd full;                // Pearson over all latents
  std::vector<std::size_t> top;        // top_k latents by trajectory variance
  Eigen::MatrixXd top_block;           // Pearson restricted to `top`
  std::vector<bool> constant;          // per latent: zero-variance trajectory
  double avg_abs_offdiag = 0.0;        // over the top block

  nlohmann::json to_json() const;
};

/// Pearson correlation of per-frame code trajectories (rows are frames).
/// Constant trajectories correlate 0 with everything else and are flagged.
CorrelationMatrix sequence_correlation(const CodeMatrix& trajectories, std::size_t top_k = 7);
CorrelationMatrix sequence_correlation(std::span<const Image> frames, const EncodeFn& encode,
                                       std::size_t top_k = 7);

/// Decodes `base` with component `l` replaced by each value in turn.
std::vector<Image> latent_traversal(const DecodeFn& decode, std::span<const double> base,
                                    std::size_t l, std::span<const double> values);

struct OrderingResult {
  std::vector<std::size_t> order;   // latent indices, most influential first
  std::vector<double> distance;     // per latent L2 pixel distance, by index
};

/// Sorts latents by ||decode(hi e_l) - decode(lo e_l)||_2, every other
/// component at zero. Ties keep index order.
OrderingResult attribute_ordering(const DecodeFn& decode, std::size_t code_length,
                                  double range_lo = -5.0, double range_hi = 5.0);

struct GeneratedBatch {
  CodeMatrix codes;
  std::vector<Image> images;
};

/// Conditional sampling: fixed components from `conditioned` (latent index ->
/// code value), unconditioned domain-adapted components uniform on [-1, 1],
/// free components standard normal.
GeneratedBatch generate(const DecodeFn& decode, std::size_t n_da, std::size_t n_r,
                        const std::map<std::size_t, double>& conditioned, std::size_t n,
                        std::uint64_t seed);

struct TransformResult {
  std::vector<double> code;  // edited code
  Image image;
};

/// Encode (means), overwrite edited components, decode.
TransformResult transform(const EncodeFn& encode, const DecodeFn& decode, const Image& x,
                          const std::map<std::size_t, double>& edits);

/// Latents as rows, frames as columns; code values clamped to [-5, 5] and
/// mapped linearly onto black..white.
Image trajectory_brightness_map(const CodeMatrix& trajectories, std::span<const std::size_t> rows);

double pixel_l2(const Image& a, const Image& b);

}  // namespace synthvae
