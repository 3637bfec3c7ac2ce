#include "gamkit/io/image.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <vector>

#include "gamkit/errors.hpp"

namespace gamkit::io {

namespace {

struct FileCloser {
  FILE* f = nullptr;
  ~FileCloser() {
    if (f) std::fclose(f);
  }
};

unsigned char to_byte(double v) {
  return static_cast<unsigned char>(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
}

}  // namespace

Tensor3<double> read_png(const std::string& path) {
  FileCloser fc;
  fc.f = std::fopen(path.c_str(), "rb");
  if (!fc.f) throw IOError("cannot open image '" + path + "'");

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IOError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IOError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IOError("'" + path + "' is not a readable PNG");
  }
  png_init_io(png, fc.f);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (depth == 16) png_set_strip_16(png);
  if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS))
    png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int rows = static_cast<int>(png_get_image_height(png, info));
  const int cols = static_cast<int>(png_get_image_width(png, info));
  const int ch = static_cast<int>(png_get_channels(png, info));
  if (ch != 1 && ch != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IOError("'" + path + "': unsupported channel count " +
                  std::to_string(ch));
  }
  std::vector<unsigned char> data(size_t(rows) * cols * ch);
  std::vector<png_bytep> rp(rows);
  for (int r = 0; r < rows; ++r) rp[r] = data.data() + size_t(r) * cols * ch;
  png_read_image(png, rp.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Tensor3<double> out(ch, rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      for (int k = 0; k < ch; ++k)
        out[k](r, c) = data[(size_t(r) * cols + c) * ch + k] / 255.0;
  return out;
}

namespace {

void write_png(const std::string& path, const unsigned char* data, int rows,
               int cols, int ch) {
  FileCloser fc;
  fc.f = std::fopen(path.c_str(), "wb");
  if (!fc.f) throw IOError("cannot open '" + path + "' for writing");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IOError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IOError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IOError("png write failed for '" + path + "'");
  }
  png_init_io(png, fc.f);
  png_set_IHDR(png, info, cols, rows, 8,
               ch == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rp(rows);
  for (int r = 0; r < rows; ++r)
    rp[r] = const_cast<png_bytep>(data + size_t(r) * cols * ch);
  png_write_image(png, rp.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

void write_png_gray(const std::string& path, const Matd& gray) {
  if (gray.size() == 0) throw EmptyInput("write_png_gray: empty grid");
  const int rows = static_cast<int>(gray.rows());
  const int cols = static_cast<int>(gray.cols());
  std::vector<unsigned char> data(size_t(rows) * cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      data[size_t(r) * cols + c] = to_byte(gray(r, c));
  write_png(path, data.data(), rows, cols, 1);
}

void write_png_rgb(const std::string& path, const Tensor3<double>& rgb) {
  if (rgb.channels() != 3)
    throw ShapeError("write_png_rgb: need exactly 3 channels");
  const int rows = rgb.rows(), cols = rgb.cols();
  std::vector<unsigned char> data(size_t(rows) * cols * 3);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      for (int k = 0; k < 3; ++k)
        data[(size_t(r) * cols + c) * 3 + k] = to_byte(rgb[k](r, c));
  write_png(path, data.data(), rows, cols, 3);
}

}  // namespace gamkit::io
