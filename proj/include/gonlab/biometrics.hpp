#pragma once

#include <vector>

#include "gonlab/image.hpp"

namespace gonlab {

class EmptyDisc : public ValidationError {
public:
    EmptyDisc() : ValidationError("mask has no disc pixels") {}
};

struct Biometrics {
    double vcdr = 0.0;  // vertical cup-to-disc ratio
    double rdr = 0.0;   // rim area / disc area
};

// Vertical extents measured as (max_row - min_row + 1) over raw pixel
// regions; no ellipse fitting. Empty cup gives 0.
double vertical_cdr(const SegmentationMask& mask);

// Area-based: rim pixel count / disc pixel count. The width-based variant
// from the literature can be swapped in behind the same signature.
double rdr(const SegmentationMask& mask);

Biometrics compute_biometrics(const SegmentationMask& mask);

double cdr_mae(const std::vector<double>& predicted, const std::vector<double>& reference);

enum class BaselineKind { Cdr, Rdr };

// Orientation: higher score = more glaucoma-like for both baselines, so
// AUC is computed identically for all models.
double baseline_score(const Biometrics& bio, BaselineKind which);

}  // namespace gonlab
