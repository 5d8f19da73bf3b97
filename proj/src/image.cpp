#include "stablehash/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

namespace stablehash {

Image resize_bilinear(const Image& img, int rows, int cols) {
  if (rows <= 0 || cols <= 0) throw InputError("resize target must be positive");
  if (img.rows() == rows && img.cols() == cols) return img;
  Image out(rows, cols);
  const double row_scale =
      rows > 1 ? double(img.rows() - 1) / double(rows - 1) : 0.0;
  const double col_scale =
      cols > 1 ? double(img.cols() - 1) / double(cols - 1) : 0.0;
  for (int r = 0; r < rows; ++r) {
    const double fy = r * row_scale;
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min<int>(y0 + 1, static_cast<int>(img.rows()) - 1);
    const double wy = fy - y0;
    for (int c = 0; c < cols; ++c) {
      const double fx = c * col_scale;
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min<int>(x0 + 1, static_cast<int>(img.cols()) - 1);
      const double wx = fx - x0;
      out(r, c) = (1 - wy) * ((1 - wx) * img(y0, x0) + wx * img(y0, x1)) +
                  wy * ((1 - wx) * img(y1, x0) + wx * img(y1, x1));
    }
  }
  return out;
}

Image crop(const Image& img, int top, int left, int h, int w) {
  if (top < 0 || left < 0 || h <= 0 || w <= 0 || top + h > img.rows() ||
      left + w > img.cols()) {
    throw InputError("crop window out of bounds");
  }
  return img.block(top, left, h, w);
}

Image luminance(const std::vector<std::uint8_t>& rgb, int rows, int cols) {
  if (rgb.size() != static_cast<std::size_t>(rows) * cols * 3) {
    throw InputError("RGB buffer size mismatch");
  }
  Image out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = (static_cast<std::size_t>(r) * cols + c) * 3;
      out(r, c) =
          (0.299 * rgb[i] + 0.587 * rgb[i + 1] + 0.114 * rgb[i + 2]) / 255.0;
    }
  }
  return out;
}

void clamp01(Image& img) {
  img = img.array().max(0.0).min(1.0);
}

namespace {

Image read_pnm(std::istream& in) {
  std::string magic;
  in >> magic;
  const bool ascii = magic == "P2" || magic == "P3";
  const bool color = magic == "P3" || magic == "P6";
  if (magic != "P2" && magic != "P5" && magic != "P3" && magic != "P6") {
    throw IoError("unsupported PNM magic '" + magic + "'");
  }
  auto next_token = [&in]() {
    std::string tok;
    while (in >> tok) {
      if (tok[0] == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      return tok;
    }
    throw IoError("truncated PNM header");
  };
  const int cols = std::stoi(next_token());
  const int rows = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  if (cols <= 0 || rows <= 0 || maxval <= 0 || maxval > 65535) {
    throw IoError("invalid PNM header");
  }
  const int channels = color ? 3 : 1;
  std::vector<double> vals(static_cast<std::size_t>(rows) * cols * channels);
  if (ascii) {
    for (auto& v : vals) {
      int x;
      if (!(in >> x)) throw IoError("truncated PNM pixel data");
      v = double(x) / maxval;
    }
  } else {
    in.get();  // single whitespace after maxval
    const int bytes_per = maxval > 255 ? 2 : 1;
    std::vector<std::uint8_t> raw(vals.size() * bytes_per);
    in.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
      throw IoError("truncated PNM pixel data");
    }
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const int x = bytes_per == 1 ? raw[i] : (raw[2 * i] << 8 | raw[2 * i + 1]);
      vals[i] = double(x) / maxval;
    }
  }
  Image out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = (static_cast<std::size_t>(r) * cols + c) * channels;
      out(r, c) = color ? 0.299 * vals[i] + 0.587 * vals[i + 1] + 0.114 * vals[i + 2]
                        : vals[i];
    }
  }
  return out;
}

struct PngReadCloser {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* fp = nullptr;
  ~PngReadCloser() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

Image read_png_file(const std::string& path) {
  PngReadCloser ctx;
  ctx.fp = std::fopen(path.c_str(), "rb");
  if (!ctx.fp) throw IoError("cannot open image file '" + path + "'");
  ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.png || !ctx.info) throw IoError("libpng init failed");
  if (setjmp(png_jmpbuf(ctx.png))) throw IoError("corrupt PNG '" + path + "'");
  png_init_io(ctx.png, ctx.fp);
  png_read_info(ctx.png, ctx.info);

  // Normalize everything to 8-bit RGB.
  png_set_expand(ctx.png);
  png_set_strip_16(ctx.png);
  png_set_strip_alpha(ctx.png);
  png_set_gray_to_rgb(ctx.png);
  png_read_update_info(ctx.png, ctx.info);

  const int rows = static_cast<int>(png_get_image_height(ctx.png, ctx.info));
  const int cols = static_cast<int>(png_get_image_width(ctx.png, ctx.info));
  const std::size_t rowbytes = png_get_rowbytes(ctx.png, ctx.info);
  if (rowbytes != static_cast<std::size_t>(cols) * 3) {
    throw IoError("unexpected PNG row size");
  }
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(rows) * rowbytes);
  std::vector<png_bytep> row_ptrs(rows);
  for (int r = 0; r < rows; ++r) row_ptrs[r] = rgb.data() + r * rowbytes;
  png_read_image(ctx.png, row_ptrs.data());
  return luminance(rgb, rows, cols);
}

}  // namespace

Image read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image file '" + path + "'");
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  if (in.gcount() >= 2 && sig[0] == 'P' && sig[1] >= '1' && sig[1] <= '6') {
    in.clear();
    in.seekg(0);
    return read_pnm(in);
  }
  static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (in.gcount() == 8 && std::equal(png_sig, png_sig + 8, sig)) {
    in.close();
    return read_png_file(path);
  }
  throw IoError("unrecognized image format in '" + path + "'");
}

void write_pgm(const std::string& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "P5\n" << img.cols() << " " << img.rows() << "\n255\n";
  for (Eigen::Index r = 0; r < img.rows(); ++r) {
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      const double v = std::clamp(img(r, c), 0.0, 1.0);
      out.put(static_cast<char>(std::lround(v * 255.0)));
    }
  }
  if (!out) throw IoError("short write to '" + path + "'");
}

namespace {
struct PngWriteCloser {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* fp = nullptr;
  ~PngWriteCloser() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (fp) std::fclose(fp);
  }
};
}  // namespace

void write_png(const std::string& path, const Image& img) {
  PngWriteCloser ctx;
  ctx.fp = std::fopen(path.c_str(), "wb");
  if (!ctx.fp) throw IoError("cannot write '" + path + "'");
  ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.png || !ctx.info) throw IoError("libpng init failed");
  if (setjmp(png_jmpbuf(ctx.png))) throw IoError("PNG write failed for '" + path + "'");
  png_init_io(ctx.png, ctx.fp);
  png_set_IHDR(ctx.png, ctx.info, static_cast<png_uint_32>(img.cols()),
               static_cast<png_uint_32>(img.rows()), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(ctx.png, ctx.info);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.cols()));
  for (Eigen::Index r = 0; r < img.rows(); ++r) {
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      row[static_cast<std::size_t>(c)] = static_cast<std::uint8_t>(
          std::lround(std::clamp(img(r, c), 0.0, 1.0) * 255.0));
    }
    png_write_row(ctx.png, row.data());
  }
  png_write_end(ctx.png, nullptr);
}

}  // namespace stablehash
