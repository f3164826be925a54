#include "robodiff/png_io.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <stdexcept>

namespace robodiff {

namespace {
struct FileCloser {
  std::FILE* fp;
  ~FileCloser() {
    if (fp) std::fclose(fp);
  }
};
}  // namespace

ImageU8 read_png_rgb8(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw std::runtime_error("cannot open PNG " + path);
  FileCloser closer{fp};

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  ImageU8 img;
  std::vector<png_bytep> rows;
  volatile bool ok = false;
  if (png && info && !setjmp(png_jmpbuf(png))) {
    png_init_io(png, fp);
    png_read_info(png, info);
    png_set_expand(png);  // palette -> rgb, gray/low-depth -> 8-bit
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    if ((png_get_color_type(png, info) & PNG_COLOR_MASK_COLOR) == 0) png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    img.w = static_cast<int>(png_get_image_width(png, info));
    img.h = static_cast<int>(png_get_image_height(png, info));
    if (png_get_rowbytes(png, info) == static_cast<std::size_t>(img.w) * 3) {
      img.rgb.resize(static_cast<std::size_t>(img.w) * img.h * 3);
      rows.resize(img.h);
      for (int y = 0; y < img.h; ++y) rows[y] = img.rgb.data() + static_cast<std::size_t>(y) * img.w * 3;
      png_read_image(png, rows.data());
      png_read_end(png, nullptr);
      ok = true;
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (!ok) throw std::runtime_error("failed to decode PNG " + path);
  return img;
}

void write_png_rgb8(const std::string& path, const ImageU8& img) {
  if (img.w < 1 || img.h < 1 || img.rgb.size() != static_cast<std::size_t>(img.w) * img.h * 3)
    throw std::invalid_argument("write_png_rgb8: inconsistent image " + path);
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot open " + path + " for writing");
  FileCloser closer{fp};

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  std::vector<png_bytep> rows(img.h);
  volatile bool ok = false;
  if (png && info && !setjmp(png_jmpbuf(png))) {
    png_init_io(png, fp);
    // Pinned encoder settings: outputs must be byte-reproducible across runs.
    png_set_compression_level(png, 6);
    png_set_filter(png, 0, PNG_FILTER_NONE);
    png_set_IHDR(png, info, img.w, img.h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    for (int y = 0; y < img.h; ++y)
      rows[y] = const_cast<png_bytep>(img.rgb.data() + static_cast<std::size_t>(y) * img.w * 3);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    ok = true;
  }
  png_destroy_write_struct(&png, &info);
  if (!ok) throw std::runtime_error("failed to write PNG " + path);
}

PaletteImage read_png_palette(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw std::runtime_error("cannot open PNG " + path);
  FileCloser closer{fp};

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  PaletteImage img;
  std::vector<png_bytep> rows;
  volatile bool ok = false;
  if (png && info && !setjmp(png_jmpbuf(png))) {
    png_init_io(png, fp);
    png_read_info(png, info);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_PALETTE) {
      if (png_get_bit_depth(png, info) < 8) png_set_packing(png);
      png_read_update_info(png, info);
      img.w = static_cast<int>(png_get_image_width(png, info));
      img.h = static_cast<int>(png_get_image_height(png, info));
      png_colorp plte = nullptr;
      int n_plte = 0;
      if (png_get_PLTE(png, info, &plte, &n_plte) == PNG_INFO_PLTE &&
          png_get_rowbytes(png, info) == static_cast<std::size_t>(img.w)) {
        img.palette.resize(n_plte);
        for (int i = 0; i < n_plte; ++i)
          img.palette[i] = {plte[i].red, plte[i].green, plte[i].blue};
        img.index.resize(static_cast<std::size_t>(img.w) * img.h);
        rows.resize(img.h);
        for (int y = 0; y < img.h; ++y)
          rows[y] = img.index.data() + static_cast<std::size_t>(y) * img.w;
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);
        ok = true;
      }
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (!ok) throw std::runtime_error(path + " is not a readable palette PNG");
  return img;
}

void write_png_palette(const std::string& path, const PaletteImage& img) {
  if (img.w < 1 || img.h < 1 || img.index.size() != static_cast<std::size_t>(img.w) * img.h)
    throw std::invalid_argument("write_png_palette: inconsistent image " + path);
  if (img.palette.empty() || img.palette.size() > 256)
    throw std::invalid_argument("write_png_palette: palette size out of range");
  for (unsigned char i : img.index)
    if (i >= img.palette.size())
      throw std::invalid_argument("write_png_palette: index beyond palette");

  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot open " + path + " for writing");
  FileCloser closer{fp};

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  std::vector<png_bytep> rows(img.h);
  std::vector<png_color> plte(img.palette.size());
  volatile bool ok = false;
  if (png && info && !setjmp(png_jmpbuf(png))) {
    png_init_io(png, fp);
    png_set_compression_level(png, 6);
    png_set_filter(png, 0, PNG_FILTER_NONE);
    png_set_IHDR(png, info, img.w, img.h, 8, PNG_COLOR_TYPE_PALETTE, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    for (std::size_t i = 0; i < img.palette.size(); ++i)
      plte[i] = {img.palette[i][0], img.palette[i][1], img.palette[i][2]};
    png_set_PLTE(png, info, plte.data(), static_cast<int>(plte.size()));
    for (int y = 0; y < img.h; ++y)
      rows[y] = const_cast<png_bytep>(img.index.data() + static_cast<std::size_t>(y) * img.w);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    ok = true;
  }
  png_destroy_write_struct(&png, &info);
  if (!ok) throw std::runtime_error("failed to write PNG " + path);
}

Tensor frame_to_tensor(const ImageU8& img) {
  Tensor t(3, img.h, img.w);
  const std::size_t plane = static_cast<std::size_t>(img.w) * img.h;
  for (std::size_t p = 0; p < plane; ++p)
    for (int c = 0; c < 3; ++c)
      t.v[c * plane + p] = static_cast<double>(img.rgb[p * 3 + c]) / 255.0 * 2.0 - 1.0;
  return t;
}

ImageU8 tensor_to_frame(const Tensor& t) {
  if (t.c != 3) throw std::invalid_argument("tensor_to_frame: need 3 channels");
  ImageU8 img;
  img.w = t.w;
  img.h = t.h;
  img.rgb.resize(t.size());
  const std::size_t plane = static_cast<std::size_t>(t.w) * t.h;
  for (std::size_t p = 0; p < plane; ++p) {
    for (int c = 0; c < 3; ++c) {
      double u = (t.v[c * plane + p] + 1.0) * 0.5 * 255.0;
      u = u < 0.0 ? 0.0 : (u > 255.0 ? 255.0 : u);
      img.rgb[p * 3 + c] = static_cast<unsigned char>(std::lround(u));
    }
  }
  return img;
}

}  // namespace robodiff
