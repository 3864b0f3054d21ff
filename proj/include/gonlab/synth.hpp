#pragma once

#include <array>
#include <string>
#include <vector>

#include "gonlab/image.hpp"
#include "gonlab/registry.hpp"

namespace gonlab {

struct DomainSpec {
    std::string domain_id;
    int n_images = 200;
    double prevalence = 0.5;
    double cdr_mean_neg = 0.47;
    double cdr_mean_pos = 0.60;
    double cdr_sd = 0.08;
    std::array<double, 3> tint = {1.0, 1.0, 1.0};
    double brightness = 1.0;
    int resolution = 224;            // square canvas side
    double fov_circle_frac = 0.92;   // field diameter as fraction of side
    double blur_frac = 0.0;          // low-quality injects
    double missing_od_frac = 0.0;    // OD-absent injects (no mask emitted)
    double child_frac = 0.0;         // under-18 injects
    double suspect_frac = 0.0;       // suspect/OHT-coded eyes
    double prediagnosis_frac = 0.0;  // extra image before the positive diagnosis
    // Rim pallor: label-correlated rim brightness shift, the cue beyond
    // disc geometry that a pixel model can exploit.
    double rim_pallor = 0.12;
    // Label-correlated background brightness. A domain-specific shortcut:
    // models trained on a single domain latch onto it and fail wherever it
    // is absent or reversed (negative values flip the direction).
    double spurious_bg = 0.0;

    void validate() const;
};

// Everything needed to re-render an image deterministically; the corpus
// stores plans, not pixels, so large domains stay cheap to hold.
struct ImagePlan {
    int index = 0;
    uint64_t render_seed = 0;
    bool positive = false;
    double true_cdr = 0.5;
    bool blurred = false;
    bool missing_od = false;
    // disc geometry in pixels, center-relative
    double disc_cx = 0.0, disc_cy = 0.0;  // offset from image center
    double disc_a = 0.0, disc_b = 0.0;    // semi-axes (horizontal, vertical)
};

struct SyntheticCorpus {
    DomainSpec spec;
    std::vector<ImagePlan> plans;
    std::vector<ImageRecord> records;  // aligned with plans
    std::vector<DiagnosisEvent> events;

    RgbImage render_image(size_t i) const;
    SegmentationMask render_mask(size_t i) const;
};

SyntheticCorpus generate_domain(const DomainSpec& spec, uint64_t seed);

// One large anchor domain plus shifted smaller domains with varying
// prevalence, tint, brightness and resolution. scale < 1 shrinks every
// domain proportionally for smoke-test use.
std::vector<SyntheticCorpus> generate_benchmark(int n_domains = 7, uint64_t seed = 0,
                                                double scale = 1.0);

// Writes images/, masks/, manifest.jsonl, diagnoses.jsonl, truth.csv and
// code_map.json under dir. Appends to an existing manifest when multiple
// corpora share a directory.
void write_corpus(const SyntheticCorpus& corpus, const std::string& dir, bool append = false);

SegmentationMask render_ellipse_mask(int width, int height, double cx, double cy, double disc_a,
                                     double disc_b, double cdr);

}  // namespace gonlab
