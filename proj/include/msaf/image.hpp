// Binary netpbm I/O: P6 pixmaps for RGB frames, P5 graymaps for semantic and
// attention maps. Writes are canonical ("P6\n<w> <h>\n255\n" + raw payload)
// and reads are strict: maxval must be 255, no trailing bytes, and every
// parse error reports the byte offset it occurred at.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msaf/common.hpp"

namespace msaf {

struct GrayImage {
    int64_t w = 0, h = 0;
    std::vector<uint8_t> px;  // row-major
};

struct RgbImage {
    int64_t w = 0, h = 0;
    std::vector<uint8_t> px;  // row-major, interleaved RGB
};

// In-memory forms; `origin` names the source in error messages.
GrayImage parse_pgm(const std::string& bytes, const std::string& origin);
RgbImage parse_ppm(const std::string& bytes, const std::string& origin);
std::string serialize_pgm(const GrayImage& img);
std::string serialize_ppm(const RgbImage& img);

GrayImage read_pgm(const std::string& path);
RgbImage read_ppm(const std::string& path);
void write_pgm(const std::string& path, const GrayImage& img);
void write_ppm(const std::string& path, const RgbImage& img);

// Model-input scalings. FTA and RGB bytes map to [0,1] by /255; semantic
// maps carry class ids 0..18 and scale by /(num_classes - 1).
inline constexpr int64_t kSemanticClasses = 19;

std::vector<float> load_fta(const GrayImage& img);
std::vector<float> load_semantic(const GrayImage& img);
std::vector<float> load_rgb_planar(const RgbImage& img);  // [3,h,w]

}  // namespace msaf
