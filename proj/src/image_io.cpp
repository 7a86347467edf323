#include "hintmvs/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

#include "hintmvs/errors.hpp"

namespace hintmvs {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open " + path);
  return f;
}

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReader() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
  }
};

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriter() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
  }
};

void read_png_rows(const std::string& path, int bit_depth_wanted,
                   std::vector<std::vector<png_byte>>& rows, int& width,
                   int& height, int& channels, int& bit_depth) {
  FilePtr f = open_file(path, "rb");
  png_byte header[8];
  if (std::fread(header, 1, 8, f.get()) != 8 || png_sig_cmp(header, 0, 8))
    throw IoError(path + ": not a PNG file");

  PngReader r;
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  r.info = png_create_info_struct(r.png);
  if (!r.png || !r.info) throw IoError(path + ": png init failed");
  if (setjmp(png_jmpbuf(r.png))) throw IoError(path + ": png read error");

  png_init_io(r.png, f.get());
  png_set_sig_bytes(r.png, 8);
  png_read_info(r.png, r.info);

  width = png_get_image_width(r.png, r.info);
  height = png_get_image_height(r.png, r.info);
  bit_depth = png_get_bit_depth(r.png, r.info);
  const int color = png_get_color_type(r.png, r.info);

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png);
  if (bit_depth < 8) png_set_expand_gray_1_2_4_to_8(r.png);
  if (png_get_valid(r.png, r.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(r.png);
  if (bit_depth_wanted == 8 && bit_depth == 16) png_set_strip_16(r.png);
  if (bit_depth == 16) png_set_swap(r.png);  // libpng reads big-endian
  png_read_update_info(r.png, r.info);

  bit_depth = png_get_bit_depth(r.png, r.info);
  channels = png_get_channels(r.png, r.info);
  const std::size_t row_bytes = png_get_rowbytes(r.png, r.info);

  rows.assign(height, std::vector<png_byte>(row_bytes));
  std::vector<png_bytep> row_ptrs(height);
  for (int y = 0; y < height; ++y) row_ptrs[y] = rows[y].data();
  png_read_image(r.png, row_ptrs.data());
  png_read_end(r.png, nullptr);
}

void write_png(const std::string& path, int width, int height, int bit_depth,
               const std::vector<std::vector<png_byte>>& rows) {
  FilePtr f = open_file(path, "wb");
  PngWriter w;
  w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  w.info = png_create_info_struct(w.png);
  if (!w.png || !w.info) throw IoError(path + ": png init failed");
  if (setjmp(png_jmpbuf(w.png))) throw IoError(path + ": png write error");

  png_init_io(w.png, f.get());
  png_set_IHDR(w.png, w.info, width, height, bit_depth, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  if (bit_depth == 16) png_set_swap(w.png);

  for (int y = 0; y < height; ++y)
    png_write_row(w.png, const_cast<png_bytep>(rows[y].data()));
  png_write_end(w.png, nullptr);
}

bool host_is_little_endian() {
  const std::uint16_t one = 1;
  return *reinterpret_cast<const std::uint8_t*>(&one) == 1;
}

}  // namespace

Image read_png_gray(const std::string& path) {
  std::vector<std::vector<png_byte>> rows;
  int w, h, channels, bit_depth;
  read_png_rows(path, 8, rows, w, h, channels, bit_depth);

  Image img(w, h);
  for (int y = 0; y < h; ++y) {
    const png_byte* row = rows[y].data();
    for (int x = 0; x < w; ++x) {
      float value;
      if (channels >= 3) {
        const float r = row[x * channels + 0] / 255.0f;
        const float g = row[x * channels + 1] / 255.0f;
        const float b = row[x * channels + 2] / 255.0f;
        value = 0.299f * r + 0.587f * g + 0.114f * b;
      } else {
        value = row[x * channels] / 255.0f;
      }
      img.at(x, y) = value;
    }
  }
  return img;
}

void write_png_gray(const Image& img, const std::string& path) {
  std::vector<std::vector<png_byte>> rows(img.height,
                                          std::vector<png_byte>(img.width));
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      rows[y][x] = static_cast<png_byte>(
          std::clamp(std::lround(img.at(x, y) * 255.0f), 0L, 255L));
  write_png(path, img.width, img.height, 8, rows);
}

DepthMap read_png_depth_mm(const std::string& path) {
  std::vector<std::vector<png_byte>> rows;
  int w, h, channels, bit_depth;
  read_png_rows(path, 16, rows, w, h, channels, bit_depth);
  if (bit_depth != 16 || channels != 1)
    throw IoError(path + ": expected 16-bit single-channel depth PNG");

  DepthMap depth(w, h);
  for (int y = 0; y < h; ++y) {
    const std::uint16_t* row = reinterpret_cast<const std::uint16_t*>(rows[y].data());
    for (int x = 0; x < w; ++x) {
      const std::uint16_t mm = row[x];
      depth.at(x, y) = mm == 0 ? kInvalidDepth : mm / 1000.0f;
    }
  }
  return depth;
}

void write_png_depth_mm(const DepthMap& depth, const std::string& path) {
  std::vector<std::vector<png_byte>> rows(
      depth.height, std::vector<png_byte>(static_cast<std::size_t>(depth.width) * 2));
  for (int y = 0; y < depth.height; ++y) {
    std::uint16_t* row = reinterpret_cast<std::uint16_t*>(rows[y].data());
    for (int x = 0; x < depth.width; ++x) {
      const float d = depth.at(x, y);
      row[x] = d <= 0.0f ? 0
                         : static_cast<std::uint16_t>(std::clamp(
                               std::lround(d * 1000.0f), 1L, 65535L));
    }
  }
  write_png(path, depth.width, depth.height, 16, rows);
}

DepthMap read_pfm(const std::string& path) {
  FilePtr f = open_file(path, "rb");
  char tag[3] = {0, 0, 0};
  int w = 0, h = 0;
  double scale = 0.0;
  if (std::fscanf(f.get(), "%2s %d %d %lf", tag, &w, &h, &scale) != 4 ||
      std::strcmp(tag, "Pf") != 0 || w <= 0 || h <= 0)
    throw IoError(path + ": malformed PFM header");
  std::fgetc(f.get());  // single whitespace after the header

  const bool file_little = scale < 0.0;
  DepthMap depth(w, h);
  std::vector<float> row(w);
  // PFM stores rows bottom-up.
  for (int y = h - 1; y >= 0; --y) {
    if (std::fread(row.data(), sizeof(float), w, f.get()) != static_cast<std::size_t>(w))
      throw IoError(path + ": truncated PFM payload");
    if (file_little != host_is_little_endian()) {
      for (float& v : row) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        bits = __builtin_bswap32(bits);
        std::memcpy(&v, &bits, 4);
      }
    }
    std::copy(row.begin(), row.end(), depth.values.begin() + static_cast<std::size_t>(y) * w);
  }
  return depth;
}

void write_pfm(const DepthMap& depth, const std::string& path) {
  FilePtr f = open_file(path, "wb");
  const double scale = host_is_little_endian() ? -1.0 : 1.0;
  std::fprintf(f.get(), "Pf\n%d %d\n%.1f\n", depth.width, depth.height, scale);
  for (int y = depth.height - 1; y >= 0; --y) {
    const float* row = depth.values.data() + static_cast<std::size_t>(y) * depth.width;
    if (std::fwrite(row, sizeof(float), depth.width, f.get()) !=
        static_cast<std::size_t>(depth.width))
      throw IoError(path + ": short write");
  }
}

void write_pgm(const Image& img, const std::string& path) {
  FilePtr f = open_file(path, "wb");
  std::fprintf(f.get(), "P5\n%d %d\n255\n", img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const unsigned char b = static_cast<unsigned char>(
          std::clamp(std::lround(img.at(x, y) * 255.0f), 0L, 255L));
      std::fputc(b, f.get());
    }
}

void write_pgm_depth(const DepthMap& depth, const std::string& path,
                     float max_depth) {
  Image img(depth.width, depth.height);
  for (int y = 0; y < depth.height; ++y)
    for (int x = 0; x < depth.width; ++x) {
      const float d = depth.at(x, y);
      img.at(x, y) = d <= 0.0f ? 0.0f : std::min(d / max_depth, 1.0f);
    }
  write_pgm(img, path);
}

}  // namespace hintmvs
