// Copyright 2026 The Pigeon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "pigeon/geometry.hpp"

namespace pigeon {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Dense 8-bit RGB raster, row-major, origin at the top-left pixel.
class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgb fill = {});

  int width() const { return width_; }
  int height() const { return height_; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb c);
  /// Writes only when (x, y) is inside the image.
  void put(int x, int y, Rgb c) {
    if (contains(x, y)) set(x, y, c);
  }
  void fill_rect(int x0, int y0, int x1, int y1, Rgb c);

  const std::vector<std::uint8_t>& data() const { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Immutable captured view. Shared between PoIs and prompts.
struct Snapshot {
  int id = 0;
  Image image;
  Pose capture_pose;
  int capture_step = 0;
};

using SnapshotRef = std::shared_ptr<const Snapshot>;

/// PNG (8-bit RGB, zlib-compressed) encoding of an image.
std::string encode_png(const Image& image);
void write_png(const Image& image, const std::filesystem::path& path);

/// Draws text using a built-in 5x7 bitmap font. Unsupported characters are
/// rendered as blanks. `scale` multiplies the glyph size.
void draw_text(Image& image, int x, int y, std::string_view text, Rgb color, int scale = 1);
int text_width(std::string_view text, int scale = 1);
inline constexpr int kGlyphHeight = 7;

}  // namespace pigeon
