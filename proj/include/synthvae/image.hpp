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
#include <vector>

namespace synthvae {

struct ImageDims {
  int height = 80;
  int width = 64;
  int channels = 3;

  std::size_t count() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
           static_cast<std::size_t>(channels);
  }
  std::string str() const;
  /// Parses "HxWxC" or "HxW" (3 channels).
  static ImageDims parse(const std::string& text);

  friend bool operator==(const ImageDims&, const ImageDims&) = default;
};

/// H x W x C raster, interleaved (HWC), nominal value range [-1, 1].
struct Image {
  ImageDims dims;
  std::vector<float> pixels;

  Image() = default;
  explicit Image(ImageDims d, float fill = 0.0f) : dims(d), pixels(d.count(), fill) {}

  float& at(int y, int x, int c) {
    return pixels[(static_cast<std::size_t>(y) * dims.width + x) * dims.channels + c];
  }
  float at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * dims.width + x) * dims.channels + c];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

/// 8-bit on-disk levels <-> [-1, 1]: v = q / 127.5 - 1.
std::uint8_t quantize(float v);
float dequantize(std::uint8_t q);

std::vector<std::uint8_t> to_bytes(const Image& image);
Image from_bytes(std::span<const std::uint8_t> bytes, ImageDims dims);

/// Round-trips an image through the 8-bit representation.
Image quantized(const Image& image);

/// Lossless PNG codec. Grayscale and RGB are supported (C = 1 or 3).
std::vector<std::uint8_t> encode_png(const Image& image);
Image decode_png(std::span<const std::uint8_t> data);
void write_png(const std::string& path, const Image& image);
Image read_png(const std::string& path);

/// Lays images out left to right, top to bottom, with `columns` per row.
Image tile(std::span<const Image> images, int columns);

}  // namespace synthvae
