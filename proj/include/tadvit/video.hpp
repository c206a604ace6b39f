// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tadvit/error.hpp"

namespace tadvit {

/// T x H x W x C unsigned 8-bit frames, frame-major, channels interleaved.
struct VideoClip {
  int frames = 0;
  int height = 0;
  int width = 0;
  int channels = 0;
  double fps = 10.0;
  std::vector<std::uint8_t> pixels;

  VideoClip() = default;
  VideoClip(int t, int h, int w, int c, double rate = 10.0)
      : frames(t), height(h), width(w), channels(c), fps(rate) {
    if (t <= 0 || h <= 0 || w <= 0 || c <= 0) throw ConfigError("video clip dimensions must be positive");
    pixels.assign(static_cast<std::size_t>(t) * h * w * c, 0);
  }

  std::size_t frame_bytes() const { return static_cast<std::size_t>(height) * width * channels; }

  std::uint8_t& at(int t, int y, int x, int c) {
    return pixels[static_cast<std::size_t>(t) * frame_bytes() +
                  (static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int t, int y, int x, int c) const {
    return pixels[static_cast<std::size_t>(t) * frame_bytes() +
                  (static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  std::uint8_t* frame(int t) { return pixels.data() + static_cast<std::size_t>(t) * frame_bytes(); }
  const std::uint8_t* frame(int t) const {
    return pixels.data() + static_cast<std::size_t>(t) * frame_bytes();
  }

  /// Copy of frames [first, first + count).
  VideoClip window(int first, int count) const {
    if (first < 0 || count <= 0 || first + count > frames)
      throw ConfigError("window [" + std::to_string(first) + ", " + std::to_string(first + count) +
                        ") outside clip of " + std::to_string(frames) + " frames");
    VideoClip out(count, height, width, channels, fps);
    std::copy(frame(first), frame(first) + count * frame_bytes(), out.pixels.begin());
    return out;
  }

  bool operator==(const VideoClip& other) const {
    return frames == other.frames && height == other.height && width == other.width &&
           channels == other.channels && pixels == other.pixels;
  }
};

}  // namespace tadvit
