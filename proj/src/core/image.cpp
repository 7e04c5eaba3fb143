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

#include "synthvae/image.hpp"

#include <png.h>

#include <csetjmp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "synthvae/errors.hpp"

namespace synthvae {

std::string ImageDims::str() const {
  return std::to_string(height) + "x" + std::to_string(width) + "x" + std::to_string(channels);
}

ImageDims ImageDims::parse(const std::string& text) {
  ImageDims d;
  char sep1 = 0, sep2 = 0;
  std::istringstream in(text);
  in >> d.height >> sep1 >> d.width;
  if (!in || sep1 != 'x') throw ShapeError("bad image dims '" + text + "', expected HxWxC");
  if (in >> sep2) {
    if (sep2 != 'x' || !(in >> d.channels))
      throw ShapeError("bad image dims '" + text + "', expected HxWxC");
  } else {
    d.channels = 3;
  }
  if (d.height <= 0 || d.width <= 0 || (d.channels != 1 && d.channels != 3))
    throw ShapeError("bad image dims '" + text + "'");
  return d;
}

std::uint8_t quantize(float v) {
  const float scaled = std::nearbyint((std::clamp(v, -1.0f, 1.0f) + 1.0f) * 127.5f);
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0f, 255.0f));
}

float dequantize(std::uint8_t q) { return static_cast<float>(q) / 127.5f - 1.0f; }

std::vector<std::uint8_t> to_bytes(const Image& image) {
  std::vector<std::uint8_t> out(image.pixels.size());
  std::transform(image.pixels.begin(), image.pixels.end(), out.begin(), quantize);
  return out;
}

Image from_bytes(std::span<const std::uint8_t> bytes, ImageDims dims) {
  if (bytes.size() != dims.count())
    throw ShapeError("byte buffer of " + std::to_string(bytes.size()) + " does not match " +
                     dims.str());
  Image img(dims);
  std::transform(bytes.begin(), bytes.end(), img.pixels.begin(), dequantize);
  return img;
}

Image quantized(const Image& image) { return from_bytes(to_bytes(image), image.dims); }

namespace {

struct PngWriteState {
  std::vector<std::uint8_t>* out;
};

void png_write_callback(png_structp png, png_bytep data, png_size_t length) {
  auto* state = static_cast<PngWriteState*>(png_get_io_ptr(png));
  state->out->insert(state->out->end(), data, data + length);
}

struct PngReadState {
  std::span<const std::uint8_t> data;
  std::size_t offset = 0;
};

void png_read_callback(png_structp png, png_bytep out, png_size_t length) {
  auto* state = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (state->offset + length > state->data.size()) png_error(png, "truncated PNG stream");
  std::memcpy(out, state->data.data() + state->offset, length);
  state->offset += length;
}

// libpng reports errors by longjmp; the message is parked here until the
// setjmp frame converts it into an exception.
thread_local std::string png_last_error;

void png_error_callback(png_structp png, png_const_charp msg) {
  png_last_error = msg ? msg : "libpng error";
  longjmp(png_jmpbuf(png), 1);
}
void png_warning_callback(png_structp, png_const_charp) {}

// Only trivially destructible locals live between setjmp and the longjmp.
bool png_encode_rows(png_structp png, png_infop info, PngWriteState* state, const ImageDims& d,
                     const std::uint8_t* bytes) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_set_write_fn(png, state, png_write_callback, nullptr);
  png_set_IHDR(png, info, d.width, d.height, 8,
               d.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(d.width) * d.channels;
  for (int y = 0; y < d.height; ++y) png_write_row(png, const_cast<png_bytep>(bytes + y * stride));
  png_write_end(png, nullptr);
  return true;
}

bool png_read_header(png_structp png, png_infop info, PngReadState* state, ImageDims* dims) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_set_read_fn(png, state, png_read_callback);
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);
  dims->width = static_cast<int>(png_get_image_width(png, info));
  dims->height = static_cast<int>(png_get_image_height(png, info));
  dims->channels = png_get_channels(png, info);
  return true;
}

bool png_read_rows(png_structp png, const ImageDims& d, std::uint8_t* bytes) {
  if (setjmp(png_jmpbuf(png))) return false;
  const std::size_t stride = static_cast<std::size_t>(d.width) * d.channels;
  for (int y = 0; y < d.height; ++y) png_read_row(png, bytes + y * stride, nullptr);
  return true;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Image& image) {
  const auto& d = image.dims;
  if (d.channels != 1 && d.channels != 3)
    throw ShapeError("PNG export supports 1 or 3 channels, got " + std::to_string(d.channels));
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_callback,
                                            png_warning_callback);
  png_infop info = png_create_info_struct(png);
  std::vector<std::uint8_t> out;
  PngWriteState state{&out};
  const auto bytes = to_bytes(image);
  const bool ok = png_encode_rows(png, info, &state, d, bytes.data());
  png_destroy_write_struct(&png, &info);
  if (!ok) throw Error("PNG encode failed: " + png_last_error);
  return out;
}

Image decode_png(std::span<const std::uint8_t> data) {
  if (data.size() < 8 || png_sig_cmp(data.data(), 0, 8) != 0) throw Error("not a PNG stream");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_callback,
                                           png_warning_callback);
  png_infop info = png_create_info_struct(png);
  PngReadState state{data, 0};
  ImageDims dims;
  if (!png_read_header(png, info, &state, &dims)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("PNG decode failed: " + png_last_error);
  }
  if (dims.channels != 1 && dims.channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ShapeError("unsupported PNG channel count " + std::to_string(dims.channels));
  }
  std::vector<std::uint8_t> bytes(dims.count());
  const bool ok = png_read_rows(png, dims, bytes.data());
  png_destroy_read_struct(&png, &info, nullptr);
  if (!ok) throw Error("PNG decode failed: " + png_last_error);
  return from_bytes(bytes, dims);
}

void write_png(const std::string& path, const Image& image) {
  const auto bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path, "write failed");
}

Image read_png(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open image");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_png(bytes);
  } catch (const IoError&) {
    throw;
  } catch (const std::exception& e) {
    throw IoError(path, e.what());
  }
}

Image tile(std::span<const Image> images, int columns) {
  if (images.empty()) return {};
  const ImageDims d = images.front().dims;
  columns = std::max(1, std::min<int>(columns, static_cast<int>(images.size())));
  const int rows = static_cast<int>((images.size() + columns - 1) / columns);
  Image out(ImageDims{rows * d.height, columns * d.width, d.channels}, -1.0f);
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].dims != d) throw ShapeError("tile: mixed image dims");
    const int oy = static_cast<int>(i / columns) * d.height;
    const int ox = static_cast<int>(i % columns) * d.width;
    for (int y = 0; y < d.height; ++y)
      for (int x = 0; x < d.width; ++x)
        for (int c = 0; c < d.channels; ++c) out.at(oy + y, ox + x, c) = images[i].at(y, x, c);
  }
  return out;
}

}  // namespace synthvae
