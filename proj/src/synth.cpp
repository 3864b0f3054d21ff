#include "gonlab/synth.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "gonlab/imaging.hpp"

namespace gonlab {

using nlohmann::json;
namespace fs = std::filesystem;

void DomainSpec::validate() const {
    if (domain_id.empty()) throw ValidationError("domain_id must be non-empty");
    if (n_images < 1) throw ValidationError("n_images must be positive");
    if (!(cdr_mean_neg > 0.0 && cdr_mean_neg < cdr_mean_pos && cdr_mean_pos < 1.0))
        throw ValidationError("require 0 < cdr_mean_neg < cdr_mean_pos < 1");
    for (double f : {prevalence, fov_circle_frac, blur_frac, missing_od_frac, child_frac,
                     suspect_frac, prediagnosis_frac})
        if (f < 0.0 || f > 1.0) throw ValidationError("fractions must be in [0,1]");
    if (resolution < 64) throw ValidationError("resolution too small");
}

namespace {

constexpr double kBlurSigma = 2.5;

struct Rgb {
    double r, g, b;
};

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

inline bool in_ellipse(double x, double y, double cx, double cy, double a, double b) {
    const double dx = (x - cx) / a;
    const double dy = (y - cy) / b;
    return dx * dx + dy * dy <= 1.0;
}

// low-frequency value noise: coarse random grid, bilinear interpolation
struct ValueNoise {
    int grid;
    std::vector<double> nodes;
    ValueNoise(int g, Rng& rng) : grid(g), nodes(static_cast<size_t>(g) * g) {
        for (auto& v : nodes) v = rng.uniform(-1.0, 1.0);
    }
    double at(double u, double v) const {  // u,v in [0,1]
        const double gx = u * (grid - 1);
        const double gy = v * (grid - 1);
        const int x0 = std::min(grid - 2, static_cast<int>(gx));
        const int y0 = std::min(grid - 2, static_cast<int>(gy));
        const double fx = gx - x0;
        const double fy = gy - y0;
        auto n = [&](int x, int y) { return nodes[static_cast<size_t>(y) * grid + x]; };
        return (1 - fx) * (1 - fy) * n(x0, y0) + fx * (1 - fy) * n(x0 + 1, y0) +
               (1 - fx) * fy * n(x0, y0 + 1) + fx * fy * n(x0 + 1, y0 + 1);
    }
};

}  // namespace

SegmentationMask render_ellipse_mask(int width, int height, double cx, double cy, double disc_a,
                                     double disc_b, double cdr) {
    SegmentationMask mask(width, height);
    const double cup_a = cdr * disc_a;
    const double cup_b = cdr * disc_b;
    const int x0 = std::max(0, static_cast<int>(cx - disc_a - 2));
    const int x1 = std::min(width - 1, static_cast<int>(cx + disc_a + 2));
    const int y0 = std::max(0, static_cast<int>(cy - disc_b - 2));
    const int y1 = std::min(height - 1, static_cast<int>(cy + disc_b + 2));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            if (!in_ellipse(x, y, cx, cy, disc_a, disc_b)) continue;
            mask.at(x, y) = (cdr > 0.0 && in_ellipse(x, y, cx, cy, cup_a, cup_b)) ? 2 : 1;
        }
    return mask;
}

RgbImage SyntheticCorpus::render_image(size_t i) const {
    const ImagePlan& p = plans.at(i);
    const int side = spec.resolution;
    Rng rng(p.render_seed);
    ValueNoise noise(9, rng);

    const double icx = side / 2.0;
    const double icy = side / 2.0;
    const double fov_r = spec.fov_circle_frac * side / 2.0;
    const double dcx = icx + p.disc_cx;
    const double dcy = icy + p.disc_cy;

    // headroom below 1.0 keeps the rim cue alive under bright domains
    const Rgb base{0.58, 0.27, 0.13};
    const Rgb disc_col{0.80, 0.66, 0.36};
    const Rgb cup_col{0.92, 0.84, 0.55};
    // pallor cue: rim of positive eyes renders paler, negatives darker
    const double rim_mult = 1.0 + spec.rim_pallor * (p.positive ? 0.5 : -0.5);
    // domain-specific shortcut: label-correlated fundus background shade
    const double bg_mult = 1.0 + spec.spurious_bg * (p.positive ? 0.5 : -0.5);

    std::vector<double> buf(static_cast<size_t>(side) * side * 3);
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            const double n = noise.at(static_cast<double>(x) / side, static_cast<double>(y) / side);
            Rgb c{clamp01((base.r + 0.06 * n) * bg_mult), clamp01((base.g + 0.05 * n) * bg_mult),
                  clamp01((base.b + 0.04 * n) * bg_mult)};
            const size_t off = (static_cast<size_t>(y) * side + x) * 3;
            buf[off] = c.r;
            buf[off + 1] = c.g;
            buf[off + 2] = c.b;
        }

    // vessel-like dark strokes radiating from the disc (cosmetic only)
    const int n_vessels = 6 + static_cast<int>(rng.next_below(4));
    for (int v = 0; v < n_vessels; ++v) {
        double angle = rng.uniform(0.0, 2.0 * M_PI);
        const double curvature = rng.uniform(-0.01, 0.01);
        double px = dcx, py = dcy;
        const int steps = static_cast<int>(fov_r * 1.2);
        for (int s = 0; s < steps; ++s) {
            px += std::cos(angle);
            py += std::sin(angle);
            angle += curvature;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int xx = static_cast<int>(px) + dx;
                    const int yy = static_cast<int>(py) + dy;
                    if (xx < 0 || yy < 0 || xx >= side || yy >= side) continue;
                    const size_t off = (static_cast<size_t>(yy) * side + xx) * 3;
                    buf[off] *= 0.72;
                    buf[off + 1] *= 0.68;
                    buf[off + 2] *= 0.68;
                }
        }
    }

    if (!p.missing_od) {
        const double cup_a = p.true_cdr * p.disc_a;
        const double cup_b = p.true_cdr * p.disc_b;
        const int x0 = std::max(0, static_cast<int>(dcx - p.disc_a - 2));
        const int x1 = std::min(side - 1, static_cast<int>(dcx + p.disc_a + 2));
        const int y0 = std::max(0, static_cast<int>(dcy - p.disc_b - 2));
        const int y1 = std::min(side - 1, static_cast<int>(dcy + p.disc_b + 2));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                if (!in_ellipse(x, y, dcx, dcy, p.disc_a, p.disc_b)) continue;
                const size_t off = (static_cast<size_t>(y) * side + x) * 3;
                if (in_ellipse(x, y, dcx, dcy, cup_a, cup_b)) {
                    buf[off] = cup_col.r;
                    buf[off + 1] = cup_col.g;
                    buf[off + 2] = cup_col.b;
                } else {
                    buf[off] = clamp01(disc_col.r * rim_mult);
                    buf[off + 1] = clamp01(disc_col.g * rim_mult);
                    buf[off + 2] = clamp01(disc_col.b * rim_mult);
                }
            }
    }

    RgbImage img(side, side);
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            const size_t off = (static_cast<size_t>(y) * side + x) * 3;
            const double dx = x - icx;
            const double dy = y - icy;
            const bool inside = dx * dx + dy * dy <= fov_r * fov_r;
            for (int c = 0; c < 3; ++c) {
                double v = inside ? buf[off + static_cast<size_t>(c)] : 0.0;
                v *= spec.tint[static_cast<size_t>(c)] * spec.brightness;
                img.data[off + static_cast<size_t>(c)] =
                    static_cast<uint8_t>(std::lround(clamp01(v) * 255.0));
            }
        }
    if (p.blurred) img = gaussian_blur(img, kBlurSigma);
    return img;
}

SegmentationMask SyntheticCorpus::render_mask(size_t i) const {
    const ImagePlan& p = plans.at(i);
    const int side = spec.resolution;
    if (p.missing_od) return SegmentationMask(side, side);
    return render_ellipse_mask(side, side, side / 2.0 + p.disc_cx, side / 2.0 + p.disc_cy,
                               p.disc_a, p.disc_b, p.true_cdr);
}

namespace {

std::string pad_index(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%05d", i);
    return buf;
}

Date random_date(Rng& rng, int year_lo, int year_hi) {
    Date d;
    d.year = year_lo + static_cast<int>(rng.next_below(static_cast<uint64_t>(year_hi - year_lo + 1)));
    d.month = 1 + static_cast<int>(rng.next_below(12));
    d.day = 1 + static_cast<int>(rng.next_below(28));
    return d;
}

}  // namespace

SyntheticCorpus generate_domain(const DomainSpec& spec, uint64_t seed) {
    spec.validate();
    SyntheticCorpus corpus;
    corpus.spec = spec;
    Rng rng(derive_seed(seed, "domain/" + spec.domain_id));

    const double disc_r_frac = 0.13;
    int plan_index = 0;
    for (int i = 0; i < spec.n_images; ++i) {
        const std::string suffix = pad_index(i);
        const std::string patient_id = spec.domain_id + "_p" + suffix;
        const bool suspect = rng.bernoulli(spec.suspect_frac);
        const bool positive = !suspect && rng.bernoulli(spec.prevalence);
        const bool child = rng.bernoulli(spec.child_frac);
        const Eye eye = rng.bernoulli(0.5) ? Eye::Left : Eye::Right;
        const Sex sex = rng.bernoulli(0.5) ? Sex::M : Sex::F;
        const int age = child ? 5 + static_cast<int>(rng.next_below(13))
                              : 18 + static_cast<int>(rng.next_below(73));

        const double cdr_mean = positive ? spec.cdr_mean_pos : spec.cdr_mean_neg;
        const double true_cdr = std::clamp(rng.normal(cdr_mean, spec.cdr_sd), 0.05, 0.98);

        ImagePlan plan;
        plan.index = plan_index;
        plan.render_seed = derive_seed(seed, "render/" + spec.domain_id, static_cast<uint64_t>(i));
        plan.positive = positive;
        plan.true_cdr = true_cdr;
        plan.blurred = rng.bernoulli(spec.blur_frac);
        plan.missing_od = rng.bernoulli(spec.missing_od_frac);
        const int side = spec.resolution;
        plan.disc_cx = rng.uniform(-0.08, 0.08) * side;
        plan.disc_cy = rng.uniform(-0.08, 0.08) * side;
        const double r = disc_r_frac * side;
        plan.disc_a = r * rng.uniform(0.92, 1.08);
        plan.disc_b = r * rng.uniform(0.95, 1.05);

        const Date diag_date = random_date(rng, 2012, 2015);
        const Date img_date = random_date(rng, 2016, 2019);

        ImageRecord rec;
        rec.image_id = spec.domain_id + "_" + suffix;
        rec.patient_id = patient_id;
        rec.eye = eye;
        rec.acquired_at = img_date;
        rec.domain_id = spec.domain_id;
        rec.image_path = "images/" + rec.image_id + ".png";
        if (!plan.missing_od) rec.mask_path = "masks/" + rec.image_id + ".png";
        rec.age_years = age;
        rec.sex = sex;

        DiagnosisEvent ev;
        ev.patient_id = patient_id;
        ev.laterality = eye == Eye::Left ? Laterality::Left : Laterality::Right;
        ev.occurred_at = diag_date;
        if (suspect) {
            ev.code = rng.bernoulli(0.5) ? "gon_suspect" : "ocular_hypertension";
            ev.category = DiagnosisCategory::SuspectOrOHT;
        } else if (positive) {
            ev.code = "glaucoma";
            ev.category = DiagnosisCategory::GonPositive;
        } else {
            ev.code = rng.bernoulli(0.5) ? "normal" : "cataract";
            ev.category = DiagnosisCategory::GonNegative;
        }
        corpus.events.push_back(ev);

        corpus.plans.push_back(plan);
        corpus.records.push_back(rec);
        ++plan_index;

        // optional extra image of the same eye taken before the positive
        // diagnosis; the labeling rules must exclude it
        if (positive && rng.bernoulli(spec.prediagnosis_frac)) {
            ImagePlan pre = plan;
            pre.index = plan_index;
            pre.render_seed =
                derive_seed(seed, "render_pre/" + spec.domain_id, static_cast<uint64_t>(i));
            pre.positive = false;  // renders with healthy geometry
            pre.true_cdr = std::clamp(rng.normal(spec.cdr_mean_neg, spec.cdr_sd), 0.05, 0.98);
            ImageRecord pre_rec = rec;
            pre_rec.image_id = rec.image_id + "_pre";
            pre_rec.image_path = "images/" + pre_rec.image_id + ".png";
            pre_rec.mask_path = "masks/" + pre_rec.image_id + ".png";
            pre_rec.acquired_at = random_date(rng, 2008, 2011);
            corpus.plans.push_back(pre);
            corpus.records.push_back(pre_rec);
            ++plan_index;
        }
    }
    return corpus;
}

std::vector<SyntheticCorpus> generate_benchmark(int n_domains, uint64_t seed, double scale) {
    if (n_domains < 2) throw ValidationError("benchmark needs >= 2 domains");
    if (scale <= 0.0) throw ValidationError("scale must be positive");

    // One KULRD-like anchor plus shifted satellites; prevalences span the
    // 0.10-0.74 band, tints/brightness/resolution carry the domain shift.
    std::vector<DomainSpec> specs;
    {
        DomainSpec anchor;
        anchor.domain_id = "D1";
        anchor.n_images = 3000;
        anchor.prevalence = 0.70;
        anchor.resolution = 224;
        anchor.blur_frac = 0.03;
        anchor.missing_od_frac = 0.01;
        anchor.child_frac = 0.02;
        anchor.suspect_frac = 0.02;
        anchor.prediagnosis_frac = 0.02;
        anchor.spurious_bg = 0.12;  // the anchor-only shortcut
        specs.push_back(anchor);
    }
    const struct {
        int n;
        double prevalence;
        int resolution;
        std::array<double, 3> tint;
        double brightness;
        double spurious_bg;
    } satellites[] = {
        {300, 0.10, 192, {0.90, 1.05, 1.15}, 1.00, -0.04},
        {250, 0.20, 256, {1.15, 0.90, 0.80}, 0.85, 0.00},
        {200, 0.50, 288, {1.00, 1.00, 1.00}, 1.12, -0.04},
        {150, 0.69, 208, {0.85, 1.00, 1.20}, 0.95, 0.00},
        {250, 0.74, 240, {1.10, 1.10, 0.85}, 0.90, -0.04},
        {200, 0.30, 272, {0.95, 0.85, 1.10}, 1.10, 0.00},
    };
    for (int d = 1; d < n_domains; ++d) {
        const auto& s = satellites[(d - 1) % std::size(satellites)];
        DomainSpec spec;
        spec.domain_id = "D" + std::to_string(d + 1);
        spec.n_images = s.n;
        spec.prevalence = s.prevalence;
        spec.resolution = s.resolution;
        spec.tint = s.tint;
        spec.brightness = s.brightness;
        spec.blur_frac = 0.02;
        spec.missing_od_frac = 0.01;
        spec.spurious_bg = s.spurious_bg;
        specs.push_back(spec);
    }
    std::vector<SyntheticCorpus> out;
    out.reserve(specs.size());
    for (auto& spec : specs) {
        spec.n_images = std::max(30, static_cast<int>(std::lround(spec.n_images * scale)));
        out.push_back(generate_domain(spec, derive_seed(seed, "benchmark")));
    }
    return out;
}

void write_corpus(const SyntheticCorpus& corpus, const std::string& dir, bool append) {
    fs::create_directories(fs::path(dir) / "images");
    fs::create_directories(fs::path(dir) / "masks");

    const auto mode = append ? std::ios::app : std::ios::trunc;
    std::ofstream manifest(fs::path(dir) / "manifest.jsonl", mode);
    std::ofstream diagnoses(fs::path(dir) / "diagnoses.jsonl", mode);
    std::ofstream truth(fs::path(dir) / "truth.csv", mode);
    if (!manifest || !diagnoses || !truth)
        throw ValidationError("cannot write corpus files under " + dir);
    if (!append) truth << "image_id,domain,label,true_cdr,blurred,missing_od\n";

    for (size_t i = 0; i < corpus.records.size(); ++i) {
        const auto& rec = corpus.records[i];
        const auto& plan = corpus.plans[i];
        write_image((fs::path(dir) / rec.image_path).string(), corpus.render_image(i));
        if (rec.mask_path)
            write_mask((fs::path(dir) / *rec.mask_path).string(), corpus.render_mask(i));

        json j;
        j["image_id"] = rec.image_id;
        j["patient_id"] = rec.patient_id;
        j["eye"] = rec.eye == Eye::Left ? "L" : "R";
        j["acquired_at"] = rec.acquired_at.to_string();
        j["domain"] = rec.domain_id;
        j["image_path"] = rec.image_path;
        if (rec.mask_path) j["mask_path"] = *rec.mask_path;
        if (rec.age_years) j["age_years"] = *rec.age_years;
        if (rec.sex) j["sex"] = *rec.sex == Sex::M ? "M" : "F";
        manifest << j.dump() << "\n";

        char row[160];
        std::snprintf(row, sizeof(row), "%s,%s,%d,%.6f,%d,%d\n", rec.image_id.c_str(),
                      rec.domain_id.c_str(), plan.positive ? 1 : 0, plan.true_cdr,
                      plan.blurred ? 1 : 0, plan.missing_od ? 1 : 0);
        truth << row;
    }
    for (const auto& ev : corpus.events) {
        json j;
        j["patient_id"] = ev.patient_id;
        j["laterality"] = ev.laterality == Laterality::Left
                              ? "L"
                              : (ev.laterality == Laterality::Right ? "R" : "B");
        j["occurred_at"] = ev.occurred_at.to_string();
        j["code"] = ev.code;
        diagnoses << j.dump() << "\n";
    }

    const fs::path code_map_path = fs::path(dir) / "code_map.json";
    if (!append || !fs::exists(code_map_path)) {
        json cm;
        for (const auto& [code, cat] : default_code_map()) {
            switch (cat) {
                case DiagnosisCategory::GonPositive: cm[code] = "pos"; break;
                case DiagnosisCategory::GonNegative: cm[code] = "neg"; break;
                case DiagnosisCategory::SuspectOrOHT: cm[code] = "suspect_oht"; break;
                case DiagnosisCategory::Unknown: cm[code] = "unknown"; break;
            }
        }
        std::ofstream out(code_map_path);
        out << cm.dump(2) << "\n";
    }
}

}  // namespace gonlab
