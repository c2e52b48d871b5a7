// SPDX-License-Identifier: Apache-2.0
#include "sist/common/image.hpp"

#include <jpeglib.h>
#include <png.h>

#include <cstdio>
#include <csetjmp>
#include <cstring>
#include <memory>

#include "sist/common/check.hpp"

namespace sist {
namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.string().c_str(), mode));
  SIST_CHECK(f != nullptr, "cannot open ", path.string());
  return f;
}

ImageU8 load_png_rgb(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  SIST_CHECK(png, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ValidationError("corrupt PNG: " + path.string());
  }
  png_init_io(png, f.get());
  png_read_info(png, info);

  png_set_expand(png);   // palettes, low bit depths, tRNS -> full channels
  png_set_strip_16(png); // 16-bit sources down to 8
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
      png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  png_read_update_info(png, info);

  const int h = static_cast<int>(png_get_image_height(png, info));
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int ch = png_get_channels(png, info);
  SIST_CHECK(ch == 3 || ch == 4, "unsupported PNG channel count ", ch, " in ", path.string());

  std::vector<uint8_t> raw(static_cast<size_t>(h) * w * ch);
  std::vector<png_bytep> rows(static_cast<size_t>(h));
  for (int y = 0; y < h; ++y) rows[static_cast<size_t>(y)] = raw.data() + static_cast<size_t>(y) * w * ch;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  ImageU8 img{h, w, 3, std::vector<uint8_t>(static_cast<size_t>(h) * w * 3)};
  if (ch == 3) {
    img.pixels = std::move(raw);
  } else {
    // composite onto white
    for (size_t i = 0, n = static_cast<size_t>(h) * w; i < n; ++i) {
      const uint8_t a = raw[i * 4 + 3];
      for (int c = 0; c < 3; ++c) {
        const int v = raw[i * 4 + static_cast<size_t>(c)] * a + 255 * (255 - a);
        img.pixels[i * 3 + static_cast<size_t>(c)] = static_cast<uint8_t>((v + 127) / 255);
      }
    }
  }
  return img;
}

struct JpegErrorMgr {
  jpeg_error_mgr base;
  std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  std::longjmp(reinterpret_cast<JpegErrorMgr*>(cinfo->err)->jump, 1);
}

ImageU8 load_jpeg_rgb(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  jpeg_decompress_struct cinfo;
  JpegErrorMgr err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw ValidationError("corrupt JPEG: " + path.string());
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);

  const int h = static_cast<int>(cinfo.output_height);
  const int w = static_cast<int>(cinfo.output_width);
  ImageU8 img{h, w, 3, std::vector<uint8_t>(static_cast<size_t>(h) * w * 3)};
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = img.pixels.data() + static_cast<size_t>(cinfo.output_scanline) * w * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}

}  // namespace

ImageU8 load_image_rgb(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  uint8_t sig[8] = {0};
  const size_t got = std::fread(sig, 1, sizeof(sig), f.get());
  f.reset();
  SIST_CHECK(got >= 3, "file too short: ", path.string());
  if (png_sig_cmp(sig, 0, got) == 0) return load_png_rgb(path);
  if (sig[0] == 0xFF && sig[1] == 0xD8 && sig[2] == 0xFF) return load_jpeg_rgb(path);
  throw ValidationError("unrecognized image format: " + path.string());
}

void save_png_rgb(const std::filesystem::path& path, const ImageU8& image) {
  SIST_CHECK(image.channels == 3, "save_png_rgb expects 3 channels");
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  SIST_CHECK(png, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw ValidationError("PNG write failed: " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(image.pixels.data() +
                                             static_cast<size_t>(y) * image.width * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void save_png_gray16(const std::filesystem::path& path, int height, int width,
                     const std::vector<uint16_t>& values) {
  SIST_CHECK(values.size() == static_cast<size_t>(height) * width,
             "gray16 size mismatch");
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  SIST_CHECK(png, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw ValidationError("PNG write failed: " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<uint8_t> row(static_cast<size_t>(width) * 2);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const uint16_t v = values[static_cast<size_t>(y) * width + x];
      row[static_cast<size_t>(x) * 2] = static_cast<uint8_t>(v >> 8);  // PNG is big-endian
      row[static_cast<size_t>(x) * 2 + 1] = static_cast<uint8_t>(v & 0xFF);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::vector<uint16_t> load_png_gray16(const std::filesystem::path& path, int* height,
                                      int* width) {
  FilePtr f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  SIST_CHECK(png, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ValidationError("corrupt PNG: " + path.string());
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  SIST_CHECK(png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY &&
                 png_get_bit_depth(png, info) == 16,
             "expected 16-bit grayscale PNG: ", path.string());
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int w = static_cast<int>(png_get_image_width(png, info));
  std::vector<uint8_t> raw(static_cast<size_t>(h) * w * 2);
  std::vector<png_bytep> rows(static_cast<size_t>(h));
  for (int y = 0; y < h; ++y) rows[static_cast<size_t>(y)] = raw.data() + static_cast<size_t>(y) * w * 2;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  std::vector<uint16_t> out(static_cast<size_t>(h) * w);
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<uint16_t>((raw[i * 2] << 8) | raw[i * 2 + 1]);
  }
  *height = h;
  *width = w;
  return out;
}

}  // namespace sist
