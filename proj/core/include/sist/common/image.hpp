// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace sist {

// Interleaved 8-bit image, RGB unless stated otherwise.
struct ImageU8 {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<uint8_t> pixels;

  uint8_t& at(int y, int x, int c) {
    return pixels[static_cast<size_t>((y * width + x) * channels + c)];
  }
  uint8_t at(int y, int x, int c) const {
    return pixels[static_cast<size_t>((y * width + x) * channels + c)];
  }
};

// Decodes PNG or JPEG (sniffed from the file signature) into RGB.
// RGBA sources are composited onto a white background.
ImageU8 load_image_rgb(const std::filesystem::path& path);

void save_png_rgb(const std::filesystem::path& path, const ImageU8& image);

// 16-bit single-channel PNG, used for depth map dumps.
void save_png_gray16(const std::filesystem::path& path, int height, int width,
                     const std::vector<uint16_t>& values);

std::vector<uint16_t> load_png_gray16(const std::filesystem::path& path,
                                      int* height, int* width);

}  // namespace sist
