// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

#include "euea/frame.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <fstream>
#include <iterator>

#include "euea/errors.hpp"

namespace euea {

Frame::Frame(int width, int height, std::vector<std::uint8_t> rgb) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("frame dimensions must be positive");
  if (rgb.size() != static_cast<std::size_t>(3) * width * height) {
    throw DimensionMismatch("frame byte length " + std::to_string(rgb.size()) + " != 3*" +
                            std::to_string(width) + "*" + std::to_string(height));
  }
  hash_ = sha256_hex(rgb);
  pixels_ = std::make_shared<const std::vector<std::uint8_t>>(std::move(rgb));
}

Frame Frame::reference(int width, int height, std::string hash) {
  Frame f;
  f.width_ = width;
  f.height_ = height;
  f.hash_ = std::move(hash);
  return f;
}

std::span<const std::uint8_t> Frame::pixels() const {
  if (!pixels_) throw std::logic_error("frame " + hash_ + " has no pixels loaded");
  return *pixels_;
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::vector<std::uint8_t> encode_png(const Frame& frame) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(frame.width());
  image.height = static_cast<png_uint_32>(frame.height());
  image.format = PNG_FORMAT_RGB;
  auto px = frame.pixels();
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, px.data(), 0, nullptr)) {
    throw FormatError(std::string("png sizing failed: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, px.data(), 0, nullptr)) {
    throw FormatError(std::string("png encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

Frame decode_png(std::span<const std::uint8_t> png) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, png.data(), png.size())) {
    throw FormatError(std::string("png header: ") + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
    png_image_free(&image);
    throw FormatError(std::string("png decode: ") + image.message);
  }
  return Frame(static_cast<int>(image.width), static_cast<int>(image.height), std::move(rgb));
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                          static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

FrameStore::FrameStore(std::filesystem::path root) : root_(std::move(root)) {}

std::string FrameStore::save(const Frame& frame) const {
  auto rel = frame.relative_path();
  auto path = root_ / rel;
  if (!std::filesystem::exists(path)) {
    std::filesystem::create_directories(path.parent_path());
    auto bytes = encode_png(frame);
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
    std::filesystem::rename(tmp, path);
  }
  return rel;
}

Frame FrameStore::load(const Frame& ref) const {
  if (ref.has_pixels()) return ref;
  auto path = root_ / ref.relative_path();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("missing frame file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Frame f = decode_png(bytes);
  if (f.hash() != ref.hash()) throw FormatError("frame digest mismatch for " + path.string());
  return f;
}

}  // namespace euea
