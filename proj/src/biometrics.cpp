#include "gonlab/biometrics.hpp"

#include <cmath>
#include <limits>

namespace gonlab {

namespace {

struct RegionExtent {
    long count = 0;
    int min_row = std::numeric_limits<int>::max();
    int max_row = -1;
};

// Single pass over the mask; cls >= 1 is disc, cls == 2 is cup.
void scan(const SegmentationMask& mask, RegionExtent& disc, RegionExtent& cup) {
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            const uint8_t c = mask.at(x, y);
            if (c >= 1) {
                ++disc.count;
                disc.min_row = std::min(disc.min_row, y);
                disc.max_row = std::max(disc.max_row, y);
            }
            if (c == 2) {
                ++cup.count;
                cup.min_row = std::min(cup.min_row, y);
                cup.max_row = std::max(cup.max_row, y);
            }
        }
    }
}

}  // namespace

double vertical_cdr(const SegmentationMask& mask) {
    RegionExtent disc, cup;
    scan(mask, disc, cup);
    if (disc.count == 0) throw EmptyDisc();
    if (cup.count == 0) return 0.0;
    const double disc_extent = disc.max_row - disc.min_row + 1;
    const double cup_extent = cup.max_row - cup.min_row + 1;
    return cup_extent / disc_extent;
}

double rdr(const SegmentationMask& mask) {
    RegionExtent disc, cup;
    scan(mask, disc, cup);
    if (disc.count == 0) throw EmptyDisc();
    return static_cast<double>(disc.count - cup.count) / static_cast<double>(disc.count);
}

Biometrics compute_biometrics(const SegmentationMask& mask) {
    RegionExtent disc, cup;
    scan(mask, disc, cup);
    if (disc.count == 0) throw EmptyDisc();
    Biometrics bio;
    bio.rdr = static_cast<double>(disc.count - cup.count) / static_cast<double>(disc.count);
    bio.vcdr = cup.count == 0 ? 0.0
                              : static_cast<double>(cup.max_row - cup.min_row + 1) /
                                    static_cast<double>(disc.max_row - disc.min_row + 1);
    return bio;
}

double cdr_mae(const std::vector<double>& predicted, const std::vector<double>& reference) {
    if (predicted.size() != reference.size() || predicted.empty())
        throw ValidationError("cdr_mae requires equal non-empty lists");
    double acc = 0.0;
    for (size_t i = 0; i < predicted.size(); ++i) acc += std::fabs(predicted[i] - reference[i]);
    return acc / static_cast<double>(predicted.size());
}

double baseline_score(const Biometrics& bio, BaselineKind which) {
    return which == BaselineKind::Cdr ? bio.vcdr : 1.0 - bio.rdr;
}

}  // namespace gonlab
