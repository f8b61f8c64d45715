#pragma once

// HSV color jitter with the fixed random ranges used for dataset expansion,
// plus P6 PPM image I/O.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "attire/errors.hpp"

namespace attire {

struct RgbImage {
    int width{0};
    int height{0};
    std::vector<uint8_t> pixels;  // row-major RGB triples

    size_t pixel_count() const { return static_cast<size_t>(width) * height; }
};

struct JitterFactors {
    double hue{1.0};         // [0.9, 1.1] when sampled
    double saturation{1.0};  // [0.5, 1.5]
    double brightness{1.0};  // [0.5, 1.5]
};

struct Hsv {
    double h{0};  // [0, 360)
    double s{0};  // [0, 1]
    double v{0};  // [0, 1]
};

Hsv rgb_to_hsv(uint8_t r, uint8_t g, uint8_t b);
std::array<uint8_t, 3> hsv_to_rgb(const Hsv& hsv);

RgbImage jitter(const RgbImage& img, const JitterFactors& f);

// Uniform draws within the declared ranges, deterministic per seed.
JitterFactors sample_factors(uint64_t seed);

RgbImage read_ppm(std::istream& in);
RgbImage read_ppm_file(const std::string& path);
void write_ppm(std::ostream& out, const RgbImage& img);
void write_ppm_file(const std::string& path, const RgbImage& img);

}  // namespace attire
