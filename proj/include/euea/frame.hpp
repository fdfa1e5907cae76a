// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace euea {

/// An RGB raster observed by the agent. Pixels are shared and immutable, so
/// copying a Frame is cheap. A Frame decoded from a JSON record carries only
/// its dimensions and digest until the pixels are loaded from a FrameStore.
class Frame {
 public:
  Frame() = default;
  Frame(int width, int height, std::vector<std::uint8_t> rgb);

  /// Pixel-less reference (width, height, digest).
  static Frame reference(int width, int height, std::string hash);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  const std::string& hash() const noexcept { return hash_; }
  bool has_pixels() const noexcept { return pixels_ != nullptr; }
  bool empty() const noexcept { return hash_.empty(); }
  std::span<const std::uint8_t> pixels() const;

  /// Relative path used when the frame is persisted next to JSONL records.
  std::string relative_path() const { return "frames/" + hash_ + ".png"; }

  friend bool operator==(const Frame& a, const Frame& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.hash_ == b.hash_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::shared_ptr<const std::vector<std::uint8_t>> pixels_;
  std::string hash_;
};

/// Lowercase hex SHA-256 of a byte buffer.
std::string sha256_hex(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_png(const Frame& frame);
Frame decode_png(std::span<const std::uint8_t> png);

std::string base64_encode(std::span<const std::uint8_t> bytes);

/// Content-addressed PNG storage rooted at a directory; frames land under
/// `<root>/frames/<sha256>.png` and are written at most once.
class FrameStore {
 public:
  explicit FrameStore(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }

  /// Writes the frame if absent; returns its relative path.
  std::string save(const Frame& frame) const;

  /// Returns a frame with pixels, loading them from disk if needed.
  Frame load(const Frame& ref) const;

 private:
  std::filesystem::path root_;
};

}  // namespace euea
