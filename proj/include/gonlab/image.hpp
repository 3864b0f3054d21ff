#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gonlab/common.hpp"

namespace gonlab {

// 8-bit RGB image, row-major, interleaved channels.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> data;  // size = width * height * 3

    RgbImage() = default;
    RgbImage(int w, int h, uint8_t fill = 0)
        : width(w), height(h), data(static_cast<size_t>(w) * h * 3, fill) {
        if (w < 1 || h < 1) throw ValidationError("image dimensions must be >= 1");
    }

    uint8_t& at(int x, int y, int c) {
        return data[(static_cast<size_t>(y) * width + x) * 3 + c];
    }
    uint8_t at(int x, int y, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * 3 + c];
    }
    bool operator==(const RgbImage&) const = default;
};

// Per-pixel {0=background, 1=rim, 2=cup} grid. Disc = class >= 1, so
// cup-inside-disc holds by construction of the encoding.
struct SegmentationMask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> cls;  // size = width * height

    SegmentationMask() = default;
    SegmentationMask(int w, int h) : width(w), height(h), cls(static_cast<size_t>(w) * h, 0) {}

    uint8_t& at(int x, int y) { return cls[static_cast<size_t>(y) * width + x]; }
    uint8_t at(int x, int y) const { return cls[static_cast<size_t>(y) * width + x]; }
    bool operator==(const SegmentationMask&) const = default;
};

// PNG via the OpenCV codec; PPM (binary P6) handled natively.
RgbImage read_image(const std::string& path);
void write_image(const std::string& path, const RgbImage& img);

// Masks are single-channel 8-bit PNG with values {0,1,2}. Cup pixels
// found outside the disc in foreign two-mask exports cannot occur here;
// values > 2 are rejected.
SegmentationMask read_mask(const std::string& path);
void write_mask(const std::string& path, const SegmentationMask& mask);

}  // namespace gonlab
