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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "synthvae/image.hpp"
#include "synthvae/schema.hpp"

namespace synthvae {

/// Bumped whenever a change to the renderer could alter a single output byte.
inline constexpr std::string_view kRendererVersion = "sprite2d/1";

/// Full parameter set of the face sprite, in default-schema attribute units.
/// Attributes absent from a rendering schema keep these neutral values.
struct FaceParams {
  double yaw = 0.0;         // degrees, [-30, 30]
  double pitch = 0.0;       // degrees, [-20, 20]
  double jaw = 0.5;         // mouth opening
  double lip = 0.5;         // lip thickness and redness
  double age = 50.0;        // years, [20, 80]
  double beard = 0.0;
  double mustache = 0.0;
  double bald = 0.0;
  double smiling = 0.5;
  double background[3] = {0.5, 0.5, 0.5};
  double head_width = 1.0;
  double brightness = 0.8;
  double hue[3] = {1.0, 1.0, 1.0};

  /// Overrides the fields named by `schema` with `values`. Throws SchemaError
  /// for attributes the renderer has no control for.
  static FaceParams from_attributes(std::span<const double> values, const AttributeSchema& schema);
};

/// Deterministic sprite renderer f(z). Validates `z` against `schema`.
Image render(std::span<const double> z, const AttributeSchema& schema, ImageDims dims);
Image render(const FaceParams& params, ImageDims dims);

/// True if every attribute of `schema` is controlled by the renderer.
bool renderer_supports(const AttributeSchema& schema);

/// Image statistic that moves monotonically with one attribute, all other
/// attributes held fixed. Keyed by default-schema short code:
///   y   x-centroid of luminance^2       p   y-centroid of luminance^2 (centre)
///   j   mean darkness, mouth box        l   mean red excess, mouth box
///   a   mean luminance, crown box       be  mean darkness, chin box
///   m   mean darkness, upper-lip box    ba  mean luminance, crown box
///   sm  mouth-corner lift (lip-colour centroid, centre minus corners)
///   bR/bG/bB  channel mean over the four corner patches
///   hs  colour distance from the background along the centre row
///   br  global mean pixel value         hR/hG/hB  channel mean, cheek boxes
double probe_statistic(const Image& image, std::string_view short_code);

/// Fixed appearance shift separating the toy "real" domain from the clean
/// synthetic one: a seeded smooth texture overlay followed by binomial blur.
struct DomainShift {
  double texture_amplitude = 0.12;
  int texture_seed = 7;
  int blur_passes = 1;

  bool identity() const { return texture_amplitude == 0.0 && blur_passes == 0; }
};

Image apply_domain_shift(const Image& image, const DomainShift& shift);

}  // namespace synthvae
