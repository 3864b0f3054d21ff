#include "gonlab/gate.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace gonlab {

namespace {

// Min-max calibration of the two proxies, measured on the default
// synthetic benchmark (sharp images cluster above the *_hi midpoint,
// sigma>=2 blurred ones near the floor).
constexpr double kLapVarLo = 0.0;
constexpr double kLapVarHi = 300.0;  // Laplacian variance, 8-bit units^2
constexpr double kRmsLo = 0.0;
constexpr double kRmsHi = 55.0;      // RMS contrast, 8-bit units
// Blur wipes out Laplacian variance but barely moves RMS contrast, so
// sharpness carries most of the grade.
constexpr double kSharpnessWeight = 0.7;

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

}  // namespace

bool QualityGrade::on_lattice(double v) {
    if (v < 1.0 || v > 10.0) return false;
    const double scaled = v * 2.0;
    return std::fabs(scaled - std::round(scaled)) < 1e-9;
}

QualityGrade QualityGrade::from_raw(double raw) {
    double snapped = std::round(raw * 2.0) / 2.0;
    if (snapped < 1.0) snapped = 1.0;
    if (snapped > 10.0) snapped = 10.0;
    return QualityGrade{snapped};
}

QualityGrade score_quality(const RgbImage& img) {
    const int w = img.width;
    const int h = img.height;
    std::vector<double> gray(static_cast<size_t>(w) * h);
    double mean = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double g = (img.at(x, y, 0) + img.at(x, y, 1) + img.at(x, y, 2)) / 3.0;
            gray[static_cast<size_t>(y) * w + x] = g;
            mean += g;
        }
    }
    mean /= static_cast<double>(w) * h;

    double rms = 0.0;
    for (double g : gray) rms += (g - mean) * (g - mean);
    rms = std::sqrt(rms / (static_cast<double>(w) * h));

    // 4-neighbour Laplacian on the interior.
    double lap_mean = 0.0, lap_sq = 0.0;
    long n_lap = 0;
    for (int y = 1; y + 1 < h; ++y) {
        for (int x = 1; x + 1 < w; ++x) {
            const size_t i = static_cast<size_t>(y) * w + x;
            const double lap = gray[i - 1] + gray[i + 1] + gray[i - w] + gray[i + w] - 4.0 * gray[i];
            lap_mean += lap;
            lap_sq += lap * lap;
            ++n_lap;
        }
    }
    double lap_var = 0.0;
    if (n_lap > 0) {
        lap_mean /= n_lap;
        lap_var = lap_sq / n_lap - lap_mean * lap_mean;
    }

    const double sharpness = clamp01((lap_var - kLapVarLo) / (kLapVarHi - kLapVarLo));
    const double contrast = clamp01((rms - kRmsLo) / (kRmsHi - kRmsLo));
    const double raw =
        1.0 + 9.0 * (kSharpnessWeight * sharpness + (1.0 - kSharpnessWeight) * contrast);
    return QualityGrade::from_raw(raw);
}

bool has_complete_od(const SegmentationMask& mask) {
    int min_x = mask.width, max_x = -1, min_y = mask.height, max_y = -1;
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (mask.at(x, y) >= 1) {
                min_x = std::min(min_x, x);
                max_x = std::max(max_x, x);
                min_y = std::min(min_y, y);
                max_y = std::max(max_y, y);
            }
        }
    }
    if (max_x < 0) return false;  // no disc pixels at all
    return min_x > 0 && min_y > 0 && max_x < mask.width - 1 && max_y < mask.height - 1;
}

GateSummary run_gate(const std::vector<GateInput>& inputs, double threshold,
                     const QualityScorer& scorer) {
    if (!QualityGrade::on_lattice(threshold))
        throw ValidationError("gate threshold must be on the 1..10 half-step lattice");
    GateSummary summary;
    summary.results.reserve(inputs.size());
    for (const auto& in : inputs) {
        GateResult r;
        r.image_id = in.image_id;
        if (!in.image) throw ValidationError("gate input without image: " + in.image_id);
        r.quality = scorer(*in.image);
        if (in.mask) {
            r.od_complete = has_complete_od(*in.mask);
        } else {
            r.od_complete = false;
            summary.warnings.push_back("no mask for " + in.image_id +
                                       "; treating optic disc as incomplete");
        }
        r.passed = r.quality.value >= threshold && r.od_complete;
        if (!r.passed) {
            // MissingOD takes precedence over LowQuality in the flow report.
            if (!r.od_complete)
                ++summary.n_missing_od;
            else
                ++summary.n_low_quality;
        }
        summary.results.push_back(std::move(r));
    }
    return summary;
}

std::string gate_results_csv(const std::vector<GateResult>& results) {
    std::ostringstream out;
    out << "image_id,quality,od_complete,passed\n";
    for (const auto& r : results) {
        out << r.image_id << ",";
        // grades are x.0 or x.5; one decimal is exact
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%.1f", r.quality.value);
        out << buf << "," << (r.od_complete ? 1 : 0) << "," << (r.passed ? 1 : 0) << "\n";
    }
    return out.str();
}

std::vector<GateResult> parse_gate_results_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    std::vector<GateResult> out;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            continue;  // header
        }
        std::istringstream ls(line);
        GateResult r;
        std::string field;
        if (!std::getline(ls, r.image_id, ',')) throw ValidationError("bad gate CSV line: " + line);
        if (!std::getline(ls, field, ',')) throw ValidationError("bad gate CSV line: " + line);
        r.quality.value = std::stod(field);
        if (!QualityGrade::on_lattice(r.quality.value))
            throw ValidationError("gate CSV grade off lattice: " + line);
        if (!std::getline(ls, field, ',')) throw ValidationError("bad gate CSV line: " + line);
        r.od_complete = field == "1";
        if (!std::getline(ls, field, ',')) field.clear();
        r.passed = field == "1";
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace gonlab
