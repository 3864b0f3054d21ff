#include "gonlab/imaging.hpp"

#include <algorithm>
#include <cmath>

namespace gonlab {

void AugmentPolicy::validate() const {
    auto contains = [](double lo, double hi, double v) { return lo <= v && v <= hi; };
    if (!contains(brightness_lo, brightness_hi, 1.0))
        throw ValidationError("brightness range must contain 1.0");
    if (!contains(zoom_lo, zoom_hi, 1.0)) throw ValidationError("zoom range must contain 1.0");
    if (rotation_deg < 0.0) throw ValidationError("rotation range must be non-negative");
    if (hflip_prob < 0.0 || hflip_prob > 1.0 || vflip_prob < 0.0 || vflip_prob > 1.0)
        throw ValidationError("flip probabilities must be in [0,1]");
}

RgbImage pad_to_square(const RgbImage& img) {
    const int side = std::max(img.width, img.height);
    if (img.width == side && img.height == side) return img;
    RgbImage out(side, side, 0);
    const int x0 = (side - img.width) / 2;
    const int y0 = (side - img.height) / 2;
    for (int y = 0; y < img.height; ++y)
        std::copy_n(&img.data[static_cast<size_t>(y) * img.width * 3],
                    static_cast<size_t>(img.width) * 3,
                    &out.data[(static_cast<size_t>(y + y0) * side + x0) * 3]);
    return out;
}

namespace {

// Bilinear sample with black outside the frame; source coordinates in
// pixel-center space.
inline void sample_bilinear(const RgbImage& img, double sx, double sy, uint8_t* out) {
    const int x0 = static_cast<int>(std::floor(sx));
    const int y0 = static_cast<int>(std::floor(sy));
    const double fx = sx - x0;
    const double fy = sy - y0;
    for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int dy = 0; dy < 2; ++dy) {
            const int y = y0 + dy;
            if (y < 0 || y >= img.height) continue;
            const double wy = dy ? fy : 1.0 - fy;
            for (int dx = 0; dx < 2; ++dx) {
                const int x = x0 + dx;
                if (x < 0 || x >= img.width) continue;
                const double wx = dx ? fx : 1.0 - fx;
                acc += wy * wx * img.at(x, y, c);
            }
        }
        out[c] = static_cast<uint8_t>(std::clamp(std::lround(acc), 0L, 255L));
    }
}

}  // namespace

RgbImage resize_bilinear(const RgbImage& img, int side) {
    if (img.width != img.height)
        throw ValidationError("resize_bilinear expects a square input; pad first");
    if (img.width == side) return img;
    RgbImage out(side, side);
    const double scale = static_cast<double>(img.width) / side;
    for (int y = 0; y < side; ++y) {
        const double sy = (y + 0.5) * scale - 0.5;
        for (int x = 0; x < side; ++x) {
            const double sx = (x + 0.5) * scale - 0.5;
            sample_bilinear(img, sx, sy, &out.data[(static_cast<size_t>(y) * side + x) * 3]);
        }
    }
    return out;
}

PreprocessedImage normalize(const RgbImage& img) {
    if (img.width != kModelInputSide || img.height != kModelInputSide)
        throw ValidationError("normalize expects a 392x392 input");
    PreprocessedImage out;
    out.data.resize(img.data.size());
    for (size_t i = 0; i < img.data.size(); ++i) {
        const int c = static_cast<int>(i % 3);
        out.data[i] =
            static_cast<float>((img.data[i] / 255.0 - kImagenetMean[c]) / kImagenetStd[c]);
    }
    return out;
}

RgbImage denormalize(const PreprocessedImage& img) {
    RgbImage out(kModelInputSide, kModelInputSide);
    for (size_t i = 0; i < img.data.size(); ++i) {
        const int c = static_cast<int>(i % 3);
        const double v = (img.data[i] * kImagenetStd[c] + kImagenetMean[c]) * 255.0;
        out.data[i] = static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
    return out;
}

RgbImage flip_horizontal(const RgbImage& img) {
    RgbImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(img.width - 1 - x, y, c);
    return out;
}

RgbImage flip_vertical(const RgbImage& img) {
    RgbImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x, img.height - 1 - y, c);
    return out;
}

namespace {

RgbImage apply_brightness(const RgbImage& img, double factor) {
    if (factor == 1.0) return img;
    RgbImage out(img.width, img.height);
    for (size_t i = 0; i < img.data.size(); ++i)
        out.data[i] = static_cast<uint8_t>(std::clamp(std::lround(img.data[i] * factor), 0L, 255L));
    return out;
}

// Inverse-mapped affine warp about the image center; black fill outside.
RgbImage warp_about_center(const RgbImage& img, double zoom, double angle_deg) {
    if (zoom == 1.0 && angle_deg == 0.0) return img;
    const double rad = angle_deg * M_PI / 180.0;
    const double ca = std::cos(rad) / zoom;
    const double sa = std::sin(rad) / zoom;
    const double cx = (img.width - 1) / 2.0;
    const double cy = (img.height - 1) / 2.0;
    RgbImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double dx = x - cx;
            const double dy = y - cy;
            const double sx = cx + ca * dx + sa * dy;
            const double sy = cy - sa * dx + ca * dy;
            sample_bilinear(img, sx, sy, &out.data[(static_cast<size_t>(y) * img.width + x) * 3]);
        }
    }
    return out;
}

}  // namespace

RgbImage augment(const RgbImage& img, const AugmentPolicy& policy, uint64_t seed) {
    policy.validate();
    Rng rng(seed);
    const double brightness = rng.uniform(policy.brightness_lo, policy.brightness_hi);
    const double zoom = rng.uniform(policy.zoom_lo, policy.zoom_hi);
    const double rotation = rng.uniform(-policy.rotation_deg, policy.rotation_deg);
    const bool hflip = rng.bernoulli(policy.hflip_prob);
    const bool vflip = rng.bernoulli(policy.vflip_prob);

    RgbImage out = apply_brightness(img, brightness);
    out = warp_about_center(out, zoom, 0.0);
    out = warp_about_center(out, 1.0, rotation);
    if (hflip) out = flip_horizontal(out);
    if (vflip) out = flip_vertical(out);
    return out;
}

RgbImage gaussian_blur(const RgbImage& img, double sigma) {
    if (sigma <= 0.0) return img;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(static_cast<size_t>(2 * radius + 1));
    double ksum = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        kernel[static_cast<size_t>(k + radius)] = std::exp(-0.5 * k * k / (sigma * sigma));
        ksum += kernel[static_cast<size_t>(k + radius)];
    }
    for (auto& v : kernel) v /= ksum;

    const int w = img.width, h = img.height;
    std::vector<double> tmp(static_cast<size_t>(w) * h * 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k) {
                    const int xx = std::clamp(x + k, 0, w - 1);
                    acc += kernel[static_cast<size_t>(k + radius)] * img.at(xx, y, c);
                }
                tmp[(static_cast<size_t>(y) * w + x) * 3 + c] = acc;
            }
    RgbImage out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k) {
                    const int yy = std::clamp(y + k, 0, h - 1);
                    acc += kernel[static_cast<size_t>(k + radius)] *
                           tmp[(static_cast<size_t>(yy) * w + x) * 3 + c];
                }
                out.at(x, y, c) = static_cast<uint8_t>(std::clamp(std::lround(acc), 0L, 255L));
            }
    return out;
}

PreprocessedImage preprocess(const RgbImage& img) {
    return normalize(resize_bilinear(pad_to_square(img)));
}

PreprocessedImage preprocess_augmented(const RgbImage& img, const AugmentPolicy& policy,
                                       uint64_t seed) {
    RgbImage padded = pad_to_square(img);
    if (!policy.is_identity()) padded = augment(padded, policy, seed);
    return normalize(resize_bilinear(padded));
}

}  // namespace gonlab
