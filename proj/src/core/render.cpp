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

#include "synthvae/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "synthvae/errors.hpp"
#include "synthvae/rng.hpp"

namespace synthvae {

namespace {

using Rgb = std::array<double, 3>;

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

Rgb mix(const Rgb& a, const Rgb& b, double t) {
  return {a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t};
}

double luminance(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

// Coverage of a shape given a signed distance (negative inside) and the
// anti-aliasing half-width.
double coverage(double sd, double aa) { return clamp01(0.5 - sd / aa); }

double ellipse_sd(double u, double v, double cx, double cy, double rx, double ry) {
  const double du = (u - cx) / rx;
  const double dv = (v - cy) / ry;
  return (std::sqrt(du * du + dv * dv) - 1.0) * std::min(rx, ry);
}

// Geometry shared by the shader and the probe boxes, derived once per image.
struct Layout {
  Rgb background, skin, hair, lip_colour;
  double hx, hy, rx, ry_top, ry_bottom;
  double fx, fy;
  double eye_dx, eye_y, eye_rx, eye_ry;
  double brow_y;
  double nose_x, nose_y;
  double mouth_x, mouth_y, mouth_hw, mouth_curve, mouth_open, teeth, lip_thickness;
  double hairline;
  double age_n;
  double beard, mustache, bald;
  double gain;

  explicit Layout(const FaceParams& f) {
    const double yn = std::clamp(f.yaw / 30.0, -1.0, 1.0);
    const double pn = std::clamp(f.pitch / 20.0, -1.0, 1.0);
    age_n = clamp01((f.age - 20.0) / 60.0);
    gain = f.brightness;
    beard = clamp01(f.beard);
    mustache = clamp01(f.mustache);
    bald = clamp01(f.bald);

    background = {clamp01(f.background[0]), clamp01(f.background[1]), clamp01(f.background[2])};
    Rgb base_skin{0.85 * f.hue[0], 0.68 * f.hue[1], 0.55 * f.hue[2]};
    for (auto& c : base_skin) c = clamp01(c);
    skin = mix(base_skin, Rgb{0.93, 0.88, 0.84}, 0.3 * age_n);
    hair = mix(Rgb{0.22, 0.15, 0.09}, Rgb{0.47, 0.47, 0.46}, age_n);
    lip_colour = mix(skin, Rgb{0.80, 0.12, 0.20}, 0.35 + 0.65 * clamp01(f.lip));

    hx = 0.12 * yn;
    hy = 0.05 + 0.06 * pn;
    rx = 0.50 * f.head_width;
    ry_top = 0.70;
    ry_bottom = 0.70 + 0.06 * clamp01(f.jaw);

    fx = hx + 0.45 * rx * yn;
    fy = hy + 0.20 * ry_top * pn;
    eye_dx = 0.40 * rx;
    eye_y = fy - 0.15 * ry_top;
    eye_rx = 0.17 * rx;
    eye_ry = 0.075 * ry_top;
    brow_y = eye_y - 0.14 * ry_top;
    nose_x = fx + 0.06 * yn * rx;
    nose_y = fy + 0.13 * ry_top;

    const double sm = clamp01(f.smiling);
    mouth_x = fx;
    mouth_y = fy + 0.42 * ry_top;
    mouth_hw = 0.44 * rx * (1.0 + 0.12 * sm);
    mouth_curve = (sm - 0.25) * 0.16 * ry_top;
    // A smile parts the lips enough to show the upper teeth.
    teeth = 0.06 * sm * ry_top;
    mouth_open = clamp01(f.jaw) * 0.085 * ry_top + teeth;
    lip_thickness = (0.03 + 0.05 * clamp01(f.lip)) * ry_top;
    hairline = hy - 0.42 * ry_top;
  }

  Rgb shade(double u, double v, double aa) const {
    Rgb c = background;

    // Head: upper and lower half-ellipses, the lower one stretched by jaw drop.
    const double ry = v < hy ? ry_top : ry_bottom;
    const double head_sd = ellipse_sd(u, v, hx, hy, rx, ry);
    const double head = coverage(head_sd, aa);
    if (head <= 0.0) {
      // Hair can still extend slightly outside the head outline.
      const double hair_sd = std::max(ellipse_sd(u, v, hx, hy, 1.08 * rx, 1.07 * ry_top),
                                      v - hairline);
      return mix(c, hair, coverage(hair_sd, aa) * (1.0 - bald));
    }

    Rgb face = skin;

    // Forehead wrinkles.
    const double forehead_lo = fy - 0.55 * ry_top;
    const double forehead_hi = fy - 0.33 * ry_top;
    if (v > forehead_lo && v < forehead_hi) {
      const double wave = 0.5 + 0.5 * std::cos(2.0 * M_PI * (v - forehead_lo) / 0.055);
      face = mix(face, Rgb{face[0] * 0.7, face[1] * 0.65, face[2] * 0.65},
                 0.35 * age_n * wave * wave);
    }

    // Nose shading.
    face = mix(face, Rgb{face[0] * 0.82, face[1] * 0.78, face[2] * 0.76},
               coverage(ellipse_sd(u, v, nose_x, nose_y, 0.09 * rx, 0.13 * ry_top), aa));

    // Beard: stubble over the lower face below the cheek line, soft upper
    // edge. Partial cover keeps the mouth and mustache readable through it.
    if (beard > 0.0) {
      const double cheek_line = fy + 0.26 * ry_top;
      const double w = coverage(cheek_line - v, 2.0 * aa) * beard * 0.6;
      face = mix(face, hair, w);
    }

    // Mouth: curved lip band around the centre line, dark opening inside.
    const double t = (u - mouth_x) / mouth_hw;
    const double centre = mouth_y - mouth_curve * t * t;
    const double dv = std::abs(v - centre);
    const double lens = std::max(0.0, 1.0 - t * t);
    const double open = mouth_open * lens;
    const double lateral_sd = (std::abs(t) - 1.0) * mouth_hw;
    const double lips = coverage(std::max(lateral_sd, dv - open - lip_thickness), aa);
    face = mix(face, lip_colour, lips);
    if (open > 0.0) {
      const double inner = coverage(std::max(lateral_sd, dv - open), aa);
      face = mix(face, Rgb{0.06, 0.01, 0.02}, inner);
      // Upper teeth fill the top of the opening.
      const double teeth_sd =
          std::max({lateral_sd, dv - open, v - (centre - open + 2.0 * teeth * lens)});
      face = mix(face, Rgb{0.95, 0.94, 0.90}, coverage(teeth_sd, aa));
    }

    // Mustache: band just above the upper lip.
    if (mustache > 0.0) {
      const double top = centre - open - lip_thickness - 0.11 * ry_top;
      const double bottom = centre - open - lip_thickness + 0.005;
      const double band_sd = std::max({(std::abs(t) - 1.12) * mouth_hw, top - v, v - bottom});
      face = mix(face, Rgb{0.5 * hair[0], 0.5 * hair[1], 0.5 * hair[2]},
                 coverage(band_sd, aa) * mustache);
    }

    // Eyes and brows.
    for (const double side : {-1.0, 1.0}) {
      const double ex = fx + side * eye_dx;
      face = mix(face, Rgb{0.97, 0.96, 0.95},
                 coverage(ellipse_sd(u, v, ex, eye_y, eye_rx, eye_ry), aa));
      face = mix(face, Rgb{0.10, 0.08, 0.08},
                 coverage(ellipse_sd(u, v, ex, eye_y, 0.55 * eye_rx, 0.9 * eye_ry), aa));
      const double brow_sd =
          std::max(std::abs(u - ex) - 1.25 * eye_rx, std::abs(v - brow_y) - 0.028 * ry_top);
      face = mix(face, hair, coverage(brow_sd, aa));
    }

    // Scalp hair above the hairline.
    const double hair_sd =
        std::max(ellipse_sd(u, v, hx, hy, 1.08 * rx, 1.07 * ry_top), v - hairline);
    face = mix(face, hair, coverage(hair_sd, aa) * (1.0 - bald));

    return mix(c, face, head);
  }
};

struct Box {
  double u0, u1, v0, v1;
};

// Iterates over the pixels whose centres fall inside a normalised box.
template <typename Fn>
void for_box(const Image& img, const Box& b, Fn&& fn) {
  const auto& d = img.dims;
  for (int y = 0; y < d.height; ++y) {
    const double v = (y + 0.5) / d.height * 2.0 - 1.0;
    if (v < b.v0 || v > b.v1) continue;
    for (int x = 0; x < d.width; ++x) {
      const double u = (x + 0.5) / d.width * 2.0 - 1.0;
      if (u < b.u0 || u > b.u1) continue;
      fn(y, x, u, v);
    }
  }
}

Rgb pixel01(const Image& img, int y, int x) {
  if (img.dims.channels == 1) {
    const double g = 0.5 * (img.at(y, x, 0) + 1.0);
    return {g, g, g};
  }
  return {0.5 * (img.at(y, x, 0) + 1.0), 0.5 * (img.at(y, x, 1) + 1.0),
          0.5 * (img.at(y, x, 2) + 1.0)};
}

double box_mean(const Image& img, const Box& b, auto&& value) {
  double sum = 0.0;
  int n = 0;
  for_box(img, b, [&](int y, int x, double, double) {
    sum += value(pixel01(img, y, x));
    ++n;
  });
  return n > 0 ? sum / n : 0.0;
}

double darkness(const Rgb& c) { return 1.0 - luminance(c[0], c[1], c[2]); }

// Nominal landmark positions for the neutral pose.
constexpr double kMouthY = 0.05 + 0.42 * 0.70;
// Mouth boxes are tall enough to hold the mouth over the full pitch range.
constexpr Box kMouthBox{-0.75, 0.75, kMouthY - 0.26, kMouthY + 0.26};
constexpr Box kUpperLipBox{-0.75, 0.75, kMouthY - 0.32, kMouthY + 0.22};
constexpr Box kCornerLeft{-0.30, -0.10, kMouthY - 0.14, kMouthY - 0.01};
constexpr Box kCornerRight{0.10, 0.30, kMouthY - 0.14, kMouthY - 0.01};
constexpr Box kChinBox{-0.30, 0.30, 0.58, 0.74};
constexpr Box kCrownBox{-0.20, 0.20, -0.60, -0.44};
constexpr Box kCheekLeft{-0.34, -0.16, -0.02, 0.14};
constexpr Box kCheekRight{0.16, 0.34, -0.02, 0.14};

double corner_mean(const Image& img, int channel) {
  const auto& d = img.dims;
  const int ph = std::max(1, std::min(4, d.height / 8));
  const int pw = std::max(1, std::min(4, d.width / 8));
  const int c = std::min(channel, d.channels - 1);
  double sum = 0.0;
  for (const int y0 : {0, d.height - ph})
    for (const int x0 : {0, d.width - pw})
      for (int y = y0; y < y0 + ph; ++y)
        for (int x = x0; x < x0 + pw; ++x) sum += img.at(y, x, c);
  return sum / (4.0 * ph * pw);
}

Rgb corner_colour(const Image& img) {
  return {0.5 * (corner_mean(img, 0) + 1.0), 0.5 * (corner_mean(img, 1) + 1.0),
          0.5 * (corner_mean(img, 2) + 1.0)};
}

// Red excess (R - G) of every mouth-box pixel, with its position.
struct Sample {
  double u, v, excess;
};

Rgb corner_colour(const Image& img);

// Pixels matching the backdrop are skipped: with strong yaw the box reaches
// past the head outline.
std::vector<Sample> mouth_samples(const Image& img) {
  const Rgb bg = corner_colour(img);
  std::vector<Sample> out;
  for_box(img, kMouthBox, [&](int y, int x, double u, double v) {
    const Rgb c = pixel01(img, y, x);
    if (std::abs(c[0] - bg[0]) + std::abs(c[1] - bg[1]) + std::abs(c[2] - bg[2]) < 0.06) return;
    out.push_back({u, v, c[0] - c[1]});
  });
  return out;
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) return 0.0;
  const auto k = static_cast<std::size_t>(q * static_cast<double>(xs.size() - 1));
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(k), xs.end());
  return xs[k];
}

// Mean red excess of the reddest pixels: lip colour saturation and area.
double lip_redness(const Image& img) {
  std::vector<double> e;
  for (const auto& s : mouth_samples(img)) e.push_back(s.excess);
  const double cut = quantile(e, 0.95);
  double sum = 0.0;
  int n = 0;
  for (double x : e) {
    if (x >= cut) {
      sum += x;
      ++n;
    }
  }
  return n ? sum / n : 0.0;
}

// Near-neutral pixels clearly brighter than the typical skin tone.
double teeth_whiteness(const Image& img) {
  const Rgb bg = corner_colour(img);
  std::vector<double> lows;
  std::vector<double> all;
  for_box(img, kMouthBox, [&](int y, int x, double, double) {
    const Rgb c = pixel01(img, y, x);
    if (std::abs(c[0] - bg[0]) + std::abs(c[1] - bg[1]) + std::abs(c[2] - bg[2]) < 0.06) return;
    all.push_back(std::min({c[0], c[1], c[2]}));
  });
  const double skin = quantile(all, 0.5);
  double sum = 0.0;
  for (double v : all) sum += std::max(0.0, v - 1.15 * skin);
  return all.empty() ? 0.0 : sum / static_cast<double>(all.size());
}

// Departure from skin tone just above the resting lip corners; a smile lifts
// the corners into this band. Calibrated for the frontal head layout.
double mouth_lift(const Image& img) {
  auto channel_mean = [&](int k) {
    auto ch = [k](const Rgb& c) { return c[k]; };
    return 0.5 * (box_mean(img, kCheekLeft, ch) + box_mean(img, kCheekRight, ch));
  };
  const Rgb skin{channel_mean(0), channel_mean(1), channel_mean(2)};
  auto departure = [&](const Rgb& c) {
    return std::abs(c[0] - skin[0]) + std::abs(c[1] - skin[1]) + std::abs(c[2] - skin[2]);
  };
  return 0.5 * (box_mean(img, kCornerLeft, departure) + box_mean(img, kCornerRight, departure));
}

}  // namespace

FaceParams FaceParams::from_attributes(std::span<const double> values,
                                       const AttributeSchema& schema) {
  FaceParams f;
  for (std::size_t l = 0; l < schema.size(); ++l) {
    const std::string& c = schema[l].short_code;
    const double v = values[l];
    if (c == "y") f.yaw = v;
    else if (c == "p") f.pitch = v;
    else if (c == "j") f.jaw = v;
    else if (c == "l") f.lip = v;
    else if (c == "a") f.age = v;
    else if (c == "be") f.beard = v;
    else if (c == "m") f.mustache = v;
    else if (c == "ba") f.bald = v;
    else if (c == "sm") f.smiling = v;
    else if (c == "bR") f.background[0] = v;
    else if (c == "bG") f.background[1] = v;
    else if (c == "bB") f.background[2] = v;
    else if (c == "hs") f.head_width = v;
    else if (c == "br") f.brightness = v;
    else if (c == "hR") f.hue[0] = v;
    else if (c == "hG") f.hue[1] = v;
    else if (c == "hB") f.hue[2] = v;
    else throw SchemaError("renderer has no control for attribute '" + schema[l].name + "'");
  }
  return f;
}

bool renderer_supports(const AttributeSchema& schema) {
  const auto reference = default_schema();
  return std::all_of(schema.attributes().begin(), schema.attributes().end(),
                     [&](const AttributeSpec& a) { return reference.find(a.short_code).has_value(); });
}

Image render(std::span<const double> z, const AttributeSchema& schema, ImageDims dims) {
  check_in_range(z, schema);
  return render(FaceParams::from_attributes(z, schema), dims);
}

Image render(const FaceParams& params, ImageDims dims) {
  constexpr int kSuper = 2;
  const Layout layout(params);
  Image img(dims);
  const int sh = dims.height * kSuper;
  const int sw = dims.width * kSuper;
  const double aa = 2.0 / std::min(sh, sw);
  for (int y = 0; y < dims.height; ++y) {
    for (int x = 0; x < dims.width; ++x) {
      Rgb acc{0.0, 0.0, 0.0};
      for (int sy = 0; sy < kSuper; ++sy) {
        const double v = (y * kSuper + sy + 0.5) / sh * 2.0 - 1.0;
        for (int sx = 0; sx < kSuper; ++sx) {
          const double u = (x * kSuper + sx + 0.5) / sw * 2.0 - 1.0;
          const Rgb c = layout.shade(u, v, aa);
          for (int k = 0; k < 3; ++k) acc[k] += c[k];
        }
      }
      const double norm = layout.gain / (kSuper * kSuper);
      if (dims.channels == 1) {
        const double g = luminance(acc[0], acc[1], acc[2]) * norm;
        img.at(y, x, 0) = static_cast<float>(2.0 * clamp01(g) - 1.0);
      } else {
        for (int k = 0; k < 3; ++k)
          img.at(y, x, k) = static_cast<float>(2.0 * clamp01(acc[k] * norm) - 1.0);
      }
    }
  }
  return img;
}

double probe_statistic(const Image& img, std::string_view code) {
  const auto& d = img.dims;
  if (code == "bR") return corner_mean(img, 0);
  if (code == "bG") return corner_mean(img, 1);
  if (code == "bB") return corner_mean(img, 2);
  if (code == "br") {
    double sum = 0.0;
    for (float p : img.pixels) sum += p;
    return sum / static_cast<double>(img.pixels.size());
  }
  if (code == "y" || code == "p") {
    const bool horizontal = code == "y";
    const Box band = horizontal ? Box{-1.0, 1.0, -0.5, 0.6} : Box{-0.5, 0.5, -1.0, 1.0};
    // Weighted by contrast against the background so the head, not the
    // brighter of head and backdrop, carries the centroid.
    const Rgb bg = corner_colour(img);
    double w_sum = 0.0, pos_sum = 0.0;
    for_box(img, band, [&](int y, int x, double u, double v) {
      const Rgb c = pixel01(img, y, x);
      const double dist = std::abs(c[0] - bg[0]) + std::abs(c[1] - bg[1]) + std::abs(c[2] - bg[2]);
      const double w = dist * dist;
      w_sum += w;
      pos_sum += w * (horizontal ? u : v);
    });
    return w_sum > 0.0 ? pos_sum / w_sum : 0.0;
  }
  if (code == "j") return box_mean(img, kMouthBox, darkness);
  if (code == "l") return lip_redness(img);
  if (code == "a" || code == "ba")
    return box_mean(img, kCrownBox, [](const Rgb& c) { return luminance(c[0], c[1], c[2]); });
  if (code == "be") return box_mean(img, kChinBox, darkness);
  if (code == "m") return box_mean(img, kUpperLipBox, darkness);
  if (code == "sm") return mouth_lift(img);
  if (code == "hs") {
    const Rgb bg = corner_colour(img);
    const int y = d.height / 2;
    double sum = 0.0;
    for (int x = 0; x < d.width; ++x) {
      const Rgb c = pixel01(img, y, x);
      sum += std::abs(c[0] - bg[0]) + std::abs(c[1] - bg[1]) + std::abs(c[2] - bg[2]);
    }
    return sum / d.width;
  }
  if (code == "hR" || code == "hG" || code == "hB") {
    const int k = code == "hR" ? 0 : (code == "hG" ? 1 : 2);
    auto channel = [k](const Rgb& c) { return c[k]; };
    return 0.5 * (box_mean(img, kCheekLeft, channel) + box_mean(img, kCheekRight, channel));
  }
  throw SchemaError("no probe statistic for attribute '" + std::string(code) + "'");
}

Image apply_domain_shift(const Image& image, const DomainShift& shift) {
  const auto& d = image.dims;
  Image out = image;
  if (shift.texture_amplitude != 0.0) {
    // Sum of a few seeded plane waves: fixed per domain, smooth, zero-mean.
    Rng rng(static_cast<std::uint64_t>(shift.texture_seed));
    struct Wave {
      double ku, kv, phase, weight;
    };
    std::array<Wave, 6> waves{};
    for (auto& w : waves) {
      const double angle = rng.uniform(0.0, 2.0 * M_PI);
      const double freq = rng.uniform(3.0, 9.0);
      w = {freq * std::cos(angle), freq * std::sin(angle), rng.uniform(0.0, 2.0 * M_PI),
           rng.uniform(0.5, 1.0)};
    }
    double weight_sum = 0.0;
    for (const auto& w : waves) weight_sum += w.weight;
    for (int y = 0; y < d.height; ++y) {
      const double v = (y + 0.5) / d.height * 2.0 - 1.0;
      for (int x = 0; x < d.width; ++x) {
        const double u = (x + 0.5) / d.width * 2.0 - 1.0;
        double t = 0.0;
        for (const auto& w : waves) t += w.weight * std::sin(M_PI * (w.ku * u + w.kv * v) + w.phase);
        t *= shift.texture_amplitude / weight_sum;
        for (int c = 0; c < d.channels; ++c) {
          // Slight per-channel tilt so the overlay reads as a colour cast.
          const double tint = 1.0 + 0.25 * (c - 1);
          out.at(y, x, c) = static_cast<float>(std::clamp(out.at(y, x, c) + t * tint, -1.0, 1.0));
        }
      }
    }
  }
  for (int pass = 0; pass < shift.blur_passes; ++pass) {
    Image src = out;
    for (int y = 0; y < d.height; ++y) {
      for (int x = 0; x < d.width; ++x) {
        for (int c = 0; c < d.channels; ++c) {
          double acc = 0.0;
          for (int dy = -1; dy <= 1; ++dy) {
            const int yy = std::clamp(y + dy, 0, d.height - 1);
            const double wy = dy == 0 ? 2.0 : 1.0;
            for (int dx = -1; dx <= 1; ++dx) {
              const int xx = std::clamp(x + dx, 0, d.width - 1);
              const double wx = dx == 0 ? 2.0 : 1.0;
              acc += wy * wx * src.at(yy, xx, c);
            }
          }
          out.at(y, x, c) = static_cast<float>(acc / 16.0);
        }
      }
    }
  }
  return out;
}

}  // namespace synthvae
