#pragma once

#include <array>
#include <vector>

#include "gonlab/image.hpp"

namespace gonlab {

inline constexpr int kModelInputSide = 392;

// Canonical ImageNet channel statistics.
inline constexpr std::array<double, 3> kImagenetMean = {0.485, 0.456, 0.406};
inline constexpr std::array<double, 3> kImagenetStd = {0.229, 0.224, 0.225};

// Normalized float image, always kModelInputSide squared, 3 channels.
struct PreprocessedImage {
    std::vector<float> data;  // side*side*3, row-major interleaved

    float& at(int x, int y, int c) {
        return data[(static_cast<size_t>(y) * kModelInputSide + x) * 3 + c];
    }
    float at(int x, int y, int c) const {
        return data[(static_cast<size_t>(y) * kModelInputSide + x) * 3 + c];
    }
};

struct AugmentPolicy {
    double brightness_lo = 0.8, brightness_hi = 1.2;  // multiplicative
    double zoom_lo = 0.9, zoom_hi = 1.1;              // scale about center
    double rotation_deg = 15.0;                       // +- range
    double hflip_prob = 0.5;
    double vflip_prob = 0.5;

    static AugmentPolicy identity() {
        return {1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0};
    }
    bool is_identity() const {
        return brightness_lo == 1.0 && brightness_hi == 1.0 && zoom_lo == 1.0 &&
               zoom_hi == 1.0 && rotation_deg == 0.0 && hflip_prob == 0.0 &&
               vflip_prob == 0.0;
    }
    void validate() const;
};

// Center the image on a max(w,h) square canvas of black pixels; an odd
// remainder puts the extra row/column on the bottom/right.
RgbImage pad_to_square(const RgbImage& img);

// Bilinear resampling with pixel centers at (i+0.5)*scale. Input must be
// square (pad first).
RgbImage resize_bilinear(const RgbImage& img, int side = kModelInputSide);

// (value/255 - mean_c) / std_c per channel. Input must be 392x392.
PreprocessedImage normalize(const RgbImage& img);

// Inverse of normalize, for round-trip checks and debugging exports.
RgbImage denormalize(const PreprocessedImage& img);

RgbImage flip_horizontal(const RgbImage& img);
RgbImage flip_vertical(const RgbImage& img);

// Samples one parameter per transform and applies
// brightness -> zoom -> rotation -> flips. Exposed geometry is filled
// with black. Deterministic per seed.
RgbImage augment(const RgbImage& img, const AugmentPolicy& policy, uint64_t seed);

// Separable Gaussian blur, kernel truncated at 3 sigma. sigma <= 0 is a
// no-op.
RgbImage gaussian_blur(const RgbImage& img, double sigma);

// pad_to_square, then augmentation (when a policy is given), then resize,
// then normalize.
PreprocessedImage preprocess(const RgbImage& img);
PreprocessedImage preprocess_augmented(const RgbImage& img, const AugmentPolicy& policy,
                                       uint64_t seed);

}  // namespace gonlab
