#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gonlab/image.hpp"

namespace gonlab {

// Grade on the FundusQ-style 1..10 lattice with 0.5 increments.
struct QualityGrade {
    double value = 1.0;

    static QualityGrade from_raw(double raw);  // round to lattice, clamp
    static bool on_lattice(double v);
};

struct GateResult {
    std::string image_id;
    QualityGrade quality;
    bool od_complete = false;
    bool passed = false;
};

// Pluggable scorer contract; the reference heuristic below stands in for
// a learned quality model.
using QualityScorer = std::function<QualityGrade(const RgbImage&)>;

// Sharpness x contrast proxy: variance of a 3x3 Laplacian plus RMS
// contrast, each min-max calibrated on the synthetic corpus and mapped
// onto [1,10].
QualityGrade score_quality(const RgbImage& img);

// True iff disc pixels exist and the disc bounding box does not touch
// any image border.
bool has_complete_od(const SegmentationMask& mask);

struct GateInput {
    std::string image_id;
    const RgbImage* image = nullptr;
    const SegmentationMask* mask = nullptr;  // null = mask missing
};

struct GateSummary {
    std::vector<GateResult> results;
    long n_low_quality = 0;
    long n_missing_od = 0;
    std::vector<std::string> warnings;
};

GateSummary run_gate(const std::vector<GateInput>& inputs, double threshold = 5.0,
                     const QualityScorer& scorer = score_quality);

std::string gate_results_csv(const std::vector<GateResult>& results);
std::vector<GateResult> parse_gate_results_csv(const std::string& csv);

}  // namespace gonlab
