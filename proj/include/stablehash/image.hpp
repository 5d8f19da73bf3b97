#pragma once

#include <string>
#include <vector>

#include "stablehash/types.hpp"

namespace stablehash {

/// Bilinear resize to (rows, cols). Identity when shape already matches.
Image resize_bilinear(const Image& img, int rows, int cols);

/// Crop of size (h, w) with top-left corner (top, left).
Image crop(const Image& img, int top, int left, int h, int w);

/// ITU-R BT.601 luminance from interleaved 8-bit RGB rows.
Image luminance(const std::vector<std::uint8_t>& rgb, int rows, int cols);

/// Clamps every pixel into [0,1].
void clamp01(Image& img);

/// Reads a grayscale image in [0,1] from PGM (P2/P5), PPM (P3/P6, converted
/// via luminance) or PNG. Format chosen by file contents, not extension.
Image read_image(const std::string& path);

void write_pgm(const std::string& path, const Image& img);
void write_png(const std::string& path, const Image& img);

}  // namespace stablehash
