#include "attire/augment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace attire {

Hsv rgb_to_hsv(uint8_t r8, uint8_t g8, uint8_t b8) {
    const double r = r8 / 255.0, g = g8 / 255.0, b = b8 / 255.0;
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double d = mx - mn;
    Hsv out;
    out.v = mx;
    out.s = mx > 0 ? d / mx : 0.0;
    if (d > 0) {
        if (mx == r) {
            out.h = 60.0 * std::fmod((g - b) / d, 6.0);
        } else if (mx == g) {
            out.h = 60.0 * ((b - r) / d + 2.0);
        } else {
            out.h = 60.0 * ((r - g) / d + 4.0);
        }
        if (out.h < 0) out.h += 360.0;
    }
    return out;
}

std::array<uint8_t, 3> hsv_to_rgb(const Hsv& hsv) {
    const double c = hsv.v * hsv.s;
    const double hp = hsv.h / 60.0;
    const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    if (hp < 1) {
        r = c; g = x;
    } else if (hp < 2) {
        r = x; g = c;
    } else if (hp < 3) {
        g = c; b = x;
    } else if (hp < 4) {
        g = x; b = c;
    } else if (hp < 5) {
        r = x; b = c;
    } else {
        r = c; b = x;
    }
    const double m = hsv.v - c;
    auto q = [&](double ch) {
        return static_cast<uint8_t>(std::lround(std::clamp(ch + m, 0.0, 1.0) * 255.0));
    };
    return {q(r), q(g), q(b)};
}

RgbImage jitter(const RgbImage& img, const JitterFactors& f) {
    RgbImage out;
    out.width = img.width;
    out.height = img.height;
    out.pixels.resize(img.pixels.size());
    for (size_t i = 0; i < img.pixels.size(); i += 3) {
        Hsv hsv = rgb_to_hsv(img.pixels[i], img.pixels[i + 1], img.pixels[i + 2]);
        hsv.h = std::fmod(hsv.h * f.hue, 360.0);
        hsv.s = std::clamp(hsv.s * f.saturation, 0.0, 1.0);
        hsv.v = std::clamp(hsv.v * f.brightness, 0.0, 1.0);
        const auto rgb = hsv_to_rgb(hsv);
        out.pixels[i] = rgb[0];
        out.pixels[i + 1] = rgb[1];
        out.pixels[i + 2] = rgb[2];
    }
    return out;
}

JitterFactors sample_factors(uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> hue(0.9, 1.1);
    std::uniform_real_distribution<double> sat(0.5, 1.5);
    std::uniform_real_distribution<double> bri(0.5, 1.5);
    JitterFactors f;
    f.hue = hue(rng);
    f.saturation = sat(rng);
    f.brightness = bri(rng);
    return f;
}

namespace {

int read_ppm_int(std::istream& in) {
    // skips whitespace and '#' comments
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    int value;
    if (!(in >> value)) throw BadImage("malformed PPM header");
    return value;
}

}  // namespace

RgbImage read_ppm(std::istream& in) {
    char p, six;
    in.get(p);
    in.get(six);
    if (!in || p != 'P' || six != '6') throw BadImage("not a P6 PPM");
    RgbImage img;
    img.width = read_ppm_int(in);
    img.height = read_ppm_int(in);
    const int maxval = read_ppm_int(in);
    if (img.width <= 0 || img.height <= 0 || maxval != 255) {
        throw BadImage("unsupported PPM dimensions or depth");
    }
    in.get();  // single whitespace before raster
    img.pixels.resize(img.pixel_count() * 3);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (static_cast<size_t>(in.gcount()) != img.pixels.size()) {
        throw BadImage("truncated PPM raster");
    }
    return img;
}

RgbImage read_ppm_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw BadImage("cannot open image: " + path);
    return read_ppm(in);
}

void write_ppm(std::ostream& out, const RgbImage& img) {
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
}

void write_ppm_file(const std::string& path, const RgbImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw BadImage("cannot open image for writing: " + path);
    write_ppm(out, img);
}

}  // namespace attire
