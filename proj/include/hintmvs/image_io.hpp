#pragma once

#include <string>

#include "hintmvs/geometry.hpp"

namespace hintmvs {

// 8-bit grayscale PNG. RGB(A) inputs are collapsed to Rec.601 luma on read.
Image read_png_gray(const std::string& path);
void write_png_gray(const Image& img, const std::string& path);

// 16-bit PNG, depth in millimeters, 0 = invalid.
DepthMap read_png_depth_mm(const std::string& path);
void write_png_depth_mm(const DepthMap& depth, const std::string& path);

// Grayscale PFM ("Pf"), float32 meters, little-endian, bottom-up rows.
// Invalid pixels keep the -1 sentinel.
DepthMap read_pfm(const std::string& path);
void write_pfm(const DepthMap& depth, const std::string& path);

// Binary PGM (P5) dump for eyeballing renders; values scaled to [0, max_value].
void write_pgm(const Image& img, const std::string& path);
void write_pgm_depth(const DepthMap& depth, const std::string& path,
                     float max_depth);

}  // namespace hintmvs
