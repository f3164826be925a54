#pragma once

#include <array>
#include <string>
#include <vector>

#include "robodiff/tensor.hpp"

namespace robodiff {

// Interleaved 8-bit RGB image.
struct ImageU8 {
  int w = 0, h = 0;
  std::vector<unsigned char> rgb;  // 3 * w * h
};

// Indexed image: one class index per pixel plus its color table. Written and
// read as palette PNGs without expansion, so masks round-trip bitwise.
struct PaletteImage {
  int w = 0, h = 0;
  std::vector<unsigned char> index;  // w * h
  std::vector<std::array<unsigned char, 3>> palette;
};

// Readers accept any PNG and normalize to 8-bit RGB; writers always emit
// 8-bit RGB with fixed encoder settings so identical pixels give identical
// files.
ImageU8 read_png_rgb8(const std::string& path);
void write_png_rgb8(const std::string& path, const ImageU8& img);

PaletteImage read_png_palette(const std::string& path);
void write_png_palette(const std::string& path, const PaletteImage& img);

// [0,255] u8 <-> [-1,1] doubles; the u8 -> tensor -> u8 round trip is exact.
Tensor frame_to_tensor(const ImageU8& img);
ImageU8 tensor_to_frame(const Tensor& t);

}  // namespace robodiff
