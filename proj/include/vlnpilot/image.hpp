#pragma once

#include "vlnpilot/world.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vlnpilot {

/// 8-bit RGB raster, row-major, no alpha.
struct RenderedImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  RenderedImage() = default;
  RenderedImage(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3) {}

  Rgb at(int x, int y) const {
    const auto i = (static_cast<std::size_t>(y) * width + x) * 3;
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
  }
  void set(int x, int y, const Rgb& c) {
    const auto i = (static_cast<std::size_t>(y) * width + x) * 3;
    rgb[i] = c.r;
    rgb[i + 1] = c.g;
    rgb[i + 2] = c.b;
  }

  std::vector<std::uint8_t> png() const;
  std::string base64_png() const;
};

std::vector<std::uint8_t> encode_png(const RenderedImage& image);
RenderedImage decode_png(std::span<const std::uint8_t> bytes);

/// Standard alphabet with '=' padding.
std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws std::invalid_argument on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace vlnpilot
