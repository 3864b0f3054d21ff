// Acceptance suite: ten end-to-end checks, one pass/fail line each.
// Intended to run via ctest; exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gonlab/biometrics.hpp"
#include "gonlab/learner.hpp"
#include "gonlab/pipeline.hpp"
#include "gonlab/registry.hpp"
#include "gonlab/stats.hpp"
#include "gonlab/synth.hpp"

using namespace gonlab;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool ok, const std::string& detail = "") {
    std::printf("[%s] criterion %2d: %-38s %s\n", ok ? "PASS" : "FAIL", number, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------- 1: AUC

double auc_pairwise(const LabeledScores& d) {
    double wins = 0;
    long pairs = 0;
    for (size_t i = 0; i < d.scores.size(); ++i)
        for (size_t j = 0; j < d.scores.size(); ++j) {
            if (d.labels[i] != 1 || d.labels[j] != 0) continue;
            ++pairs;
            if (d.scores[i] > d.scores[j])
                wins += 1.0;
            else if (d.scores[i] == d.scores[j])
                wins += 0.5;
        }
    return wins / pairs;
}

void criterion_auc_oracle() {
    const auto t0 = Clock::now();
    Rng rng(0xA0C);
    double max_err = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 2 + static_cast<int>(rng.next_below(199));
        LabeledScores d;
        bool pos = false, neg = false;
        for (int i = 0; i < n; ++i) {
            const int y = rng.bernoulli(0.5) ? 1 : 0;
            d.labels.push_back(y);
            // quantized scores so ties occur regularly
            d.scores.push_back(std::round(rng.uniform(0.0, 1.0) * 25.0) / 25.0);
            (y ? pos : neg) = true;
        }
        if (!pos) d.labels[0] = 1;
        if (!neg) d.labels[1] = 0;
        max_err = std::max(max_err, std::fabs(auc(d) - auc_pairwise(d)));
    }
    const double elapsed = seconds_since(t0);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "max |err| = %.2e, %.1f s", max_err, elapsed);
    report(1, "AUC rank-sum vs pairwise oracle", max_err < 1e-12 && elapsed < 10.0, buf);
}

// ----------------------------------------------------------- 2: Wilcoxon

double wilcoxon_enumerated(const std::vector<double>& diffs) {
    std::vector<double> mag;
    for (double v : diffs)
        if (v != 0.0) mag.push_back(std::fabs(v));
    const size_t n = mag.size();
    if (n == 0) return 1.0;
    // average ranks of |d| with ties
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return mag[a] < mag[b]; });
    std::vector<double> rank(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && mag[order[j + 1]] == mag[order[i]]) ++j;
        const double avg = (double(i + 1) + double(j + 1)) / 2.0;
        for (size_t k = i; k <= j; ++k) rank[order[k]] = avg;
        i = j + 1;
    }
    double w_plus = 0.0, total = 0.0;
    size_t idx = 0;
    std::vector<double> signed_rank;
    for (double v : diffs) {
        if (v == 0.0) continue;
        total += rank[idx];
        if (v > 0) w_plus += rank[idx];
        signed_rank.push_back(rank[idx]);
        ++idx;
    }
    const double w_obs = std::min(w_plus, total - w_plus);
    long le = 0, ge = 0;
    const long count = 1L << n;
    for (long m = 0; m < count; ++m) {
        double w = 0.0;
        for (size_t b = 0; b < n; ++b)
            if (m & (1L << b)) w += signed_rank[b];
        if (w <= w_obs + 1e-9) ++le;
        if (w >= total - w_obs - 1e-9) ++ge;
    }
    return std::min(1.0, double(le + ge) / double(count));
}

void criterion_wilcoxon_exact() {
    const auto t0 = Clock::now();
    Rng rng(0xB1);
    double max_err = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng.next_below(12));
        std::vector<double> d;
        for (int k = 0; k < n; ++k) {
            // coarse grid: ties (and the occasional zero, dropped) occur
            double v = std::round(rng.uniform(-1.0, 1.0) * 5.0) / 5.0;
            d.push_back(v);
        }
        max_err = std::max(max_err, std::fabs(wilcoxon_signed_rank(d) - wilcoxon_enumerated(d)));
    }
    const bool worked = std::fabs(wilcoxon_signed_rank({1, 2, 3, 4, 5}) - 0.0625) < 1e-12;
    const double elapsed = seconds_since(t0);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "max |err| = %.2e, d=[1..5] ok=%d, %.1f s", max_err, worked,
                  elapsed);
    report(2, "Wilcoxon exact vs 2^n enumeration", max_err < 1e-12 && worked && elapsed < 30.0,
           buf);
}

// -------------------------------------------- 3: Brier / vCDR / RDR oracles

void criterion_formula_oracles() {
    // ((0.8-1)^2 + (0.3-0)^2) / 2: exact up to the rounding of the literal
    const double b = brier({{0.8, 0.3}, {1, 0}});
    const bool brier_ok =
        b == ((0.8 - 1.0) * (0.8 - 1.0) + 0.3 * 0.3) / 2.0 && std::fabs(b - 0.065) < 1e-15;

    Rng rng(0xC3);
    bool vcdr_ok = true, rdr_ok = true;
    for (int trial = 0; trial < 100; ++trial) {
        const int side = 160 + static_cast<int>(rng.next_below(140));
        const double a = rng.uniform(20.0, side / 5.0);
        const double b = rng.uniform(20.0, side / 5.0);
        const double cx = side / 2.0 + rng.uniform(-10.0, 10.0);
        const double cy = side / 2.0 + rng.uniform(-10.0, 10.0);
        const double cdr = rng.uniform(0.2, 0.9);
        const auto mask = render_ellipse_mask(side, side, cx, cy, a, b, cdr);

        const double tol = 2.0 / (2.0 * b);  // 2 pixels over the disc vertical extent
        if (std::fabs(vertical_cdr(mask) - cdr) > tol) vcdr_ok = false;

        long disc = 0, cup = 0;
        for (uint8_t v : mask.cls) {
            if (v != 0) ++disc;
            if (v == 2) ++cup;
        }
        if (rdr(mask) != double(disc - cup) / double(disc)) rdr_ok = false;
    }
    char buf[96];
    std::snprintf(buf, sizeof(buf), "brier=%d vcdr=%d rdr=%d", brier_ok, vcdr_ok, rdr_ok);
    report(3, "Brier/vCDR/RDR formula oracles", brier_ok && vcdr_ok && rdr_ok, buf);
}

// ------------------------------------------------------ 4: gradient check

void criterion_gradient_check() {
    Rng rng(0xD4);
    FeatureSpec spec;
    spec.blocks = 1;  // 3 features keeps finite differences cheap
    const int dim = spec.dim();
    double max_rel = 0.0;

    for (int draw = 0; draw < 100; ++draw) {
        std::vector<Sample> train_set, val_set;
        for (int i = 0; i < 20; ++i) {
            Sample s;
            s.image_id = "s" + std::to_string(i);
            s.label = i % 2;
            s.features.resize(dim);
            for (auto& f : s.features) f = static_cast<float>(rng.normal(0.0, 1.0));
            train_set.push_back(s);
            if (i < 4) val_set.push_back(s);
        }
        LogisticModel m0;
        m0.feature_spec = spec;
        m0.weights.resize(dim);
        for (auto& w : m0.weights) w = rng.normal(0.0, 0.5);
        m0.bias = rng.normal(0.0, 0.5);

        TrainConfig cfg;
        cfg.epochs = 1;
        cfg.batch_size = 64;  // one full-batch step
        cfg.learning_rate = 1.0;
        cfg.seed = 7;
        const auto run = train(m0, train_set, val_set, cfg);

        // implied gradient of the mean BCE from the single SGD step
        std::vector<double> g_impl(dim + 1);
        for (int i = 0; i < dim; ++i)
            g_impl[i] = (m0.weights[i] - run.model.weights[i]) / cfg.learning_rate;
        g_impl[dim] = (m0.bias - run.model.bias) / cfg.learning_rate;

        const auto mean_bce = [&](const std::vector<double>& w, double bias) {
            double loss = 0.0;
            for (const auto& s : train_set) {
                double z = bias;
                for (int i = 0; i < dim; ++i) z += w[i] * s.features[i];
                const double p = 1.0 / (1.0 + std::exp(-z));
                const double eps = 1e-12;
                loss -= s.label ? std::log(p + eps) : std::log(1.0 - p + eps);
            }
            return loss / train_set.size();
        };

        const double h = 1e-6;
        for (int i = 0; i <= dim; ++i) {
            auto wp = m0.weights, wm = m0.weights;
            double bp = m0.bias, bm = m0.bias;
            if (i < dim) {
                wp[i] += h;
                wm[i] -= h;
            } else {
                bp += h;
                bm -= h;
            }
            const double g_fd = (mean_bce(wp, bp) - mean_bce(wm, bm)) / (2.0 * h);
            const double rel = std::fabs(g_impl[i] - g_fd) / std::max(1.0, std::fabs(g_fd));
            max_rel = std::max(max_rel, rel);
        }
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "max rel err = %.2e", max_rel);
    report(4, "BCE gradient vs finite differences", max_rel < 1e-5, buf);
}

// ------------------------------------- 5 & 6: MSD vs SSD on the benchmark

struct BenchmarkData {
    std::vector<ImageRecord> records;
    FeatureTable features;
    std::vector<std::string> domain_ids;
};

BenchmarkData featurize_benchmark(uint64_t seed) {
    BenchmarkData out;
    const FeatureSpec spec;
    auto domains = generate_benchmark(7, seed, 1.0);
    for (auto& corpus : domains) {
        out.domain_ids.push_back(corpus.spec.domain_id);

        // real labeling path: diagnoses, then exclusions from the plans
        auto records = corpus.records;
        derive_eye_labels(records, corpus.events);
        std::unordered_map<std::string, GateResult> gate;
        for (size_t i = 0; i < corpus.plans.size(); ++i) {
            GateResult g;
            g.image_id = records[i].image_id;
            g.od_complete = !corpus.plans[i].missing_od;
            g.quality = QualityGrade{corpus.plans[i].blurred ? 3.0 : 8.0};
            g.passed = g.od_complete && !corpus.plans[i].blurred;
            gate[g.image_id] = g;
        }
        apply_exclusions(records, gate);

        for (size_t i = 0; i < corpus.plans.size(); ++i) {
            if (!records[i].label_state.is_eligible()) continue;
            const auto img = corpus.render_image(i);
            Sample s;
            s.image_id = records[i].image_id;
            s.label = records[i].label_state.state == GonLabel::State::Positive ? 1 : 0;
            s.features = extract_features(preprocess(img), spec);
            out.features[s.image_id] = std::move(s);
        }
        for (auto& r : records) out.records.push_back(std::move(r));
    }
    return out;
}

LabeledScores score_domain(const LogisticModel& m, const BenchmarkData& bench,
                           const std::string& domain) {
    LabeledScores d;
    for (const auto& r : bench.records) {
        if (r.domain_id != domain || !r.label_state.is_eligible()) continue;
        const auto& s = bench.features.at(r.image_id);
        d.scores.push_back(m.predict(s.features));
        d.labels.push_back(s.label);
    }
    return d;
}

void criterion_msd_vs_ssd(const BenchmarkData& bench) {
    const auto t0 = Clock::now();
    const FeatureSpec spec;
    const std::vector<std::string> targets{"D2", "D3", "D4", "D5", "D6"};
    const std::vector<uint64_t> seeds{101, 102, 103, 104, 105};

    std::map<uint64_t, LogisticModel> ssd_by_seed;
    for (uint64_t sd : seeds) {
        TrainConfig cfg;
        cfg.seed = sd;
        ssd_by_seed[sd] = train_ssd(bench.records, bench.features, "D1", cfg, spec).model;
    }

    int domains_msd_wins = 0;
    int domains_significant = 0;
    std::vector<double> msd_aucs;
    std::string detail;
    for (const auto& target : targets) {
        double ssd_sum = 0.0, msd_sum = 0.0;
        std::optional<LogisticModel> first_msd;
        for (uint64_t sd : seeds) {
            TrainConfig cfg;
            cfg.seed = sd;
            const auto msd =
                train_msd(bench.records, bench.features, target, cfg, spec).model;
            if (!first_msd) first_msd = msd;
            const auto msd_scores = score_domain(msd, bench, target);
            const auto ssd_scores = score_domain(ssd_by_seed[sd], bench, target);
            msd_sum += auc(msd_scores);
            ssd_sum += auc(ssd_scores);
        }
        const double msd_mean = msd_sum / seeds.size();
        const double ssd_mean = ssd_sum / seeds.size();
        msd_aucs.push_back(msd_mean);
        if (msd_mean >= ssd_mean) ++domains_msd_wins;

        const auto msd_scores = score_domain(*first_msd, bench, target);
        const auto ssd_scores = score_domain(ssd_by_seed[seeds[0]], bench, target);
        const auto cmp = compare_models(msd_scores.scores, ssd_scores.scores, msd_scores.labels,
                                        1000, 0.95, 0x5EED);
        if (cmp.significant_at_0_05 &&
            auc(msd_scores) > auc(ssd_scores))
            ++domains_significant;

        char frag[96];
        std::snprintf(frag, sizeof(frag), "%s msd=%.3f ssd=%.3f p=%.4f; ", target.c_str(),
                      msd_mean, ssd_mean, cmp.p_value);
        detail += frag;
    }
    const double elapsed = seconds_since(t0);
    std::printf("    %s\n", detail.c_str());
    char buf[96];
    std::snprintf(buf, sizeof(buf), "wins=%d/5 significant=%d/5, %.0f s", domains_msd_wins,
                  domains_significant, elapsed);
    report(5, "MSD beats SSD out of domain",
           domains_msd_wins >= 4 && domains_significant >= 3 && elapsed < 600.0, buf);

    const double lo = *std::min_element(msd_aucs.begin(), msd_aucs.end());
    const double hi = *std::max_element(msd_aucs.begin(), msd_aucs.end());
    char buf6[64];
    std::snprintf(buf6, sizeof(buf6), "MSD AUC range [%.3f, %.3f]", lo, hi);
    report(6, "MSD target AUCs within [0.80, 1.0]", lo >= 0.80 && hi <= 1.0, buf6);
}

// -------------------------------------------- 7: labeling property suite

void criterion_labeling_properties() {
    Rng rng(0x7AB);
    long violations = 0;
    const char* suspect_codes[] = {"glaucoma_suspect", "ocular_hypertension"};
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<DiagnosisEvent> events;
        const int n_events = static_cast<int>(rng.next_below(6));
        for (int k = 0; k < n_events; ++k) {
            DiagnosisEvent e;
            e.patient_id = "p";
            e.laterality = static_cast<Laterality>(rng.next_below(3));
            e.occurred_at = Date{2010 + static_cast<int>(rng.next_below(8)),
                                 1 + static_cast<int>(rng.next_below(12)),
                                 1 + static_cast<int>(rng.next_below(28))};
            e.category = static_cast<DiagnosisCategory>(rng.next_below(4));
            e.code = e.category == DiagnosisCategory::SuspectOrOHT
                         ? suspect_codes[rng.next_below(2)]
                         : "code";
            events.push_back(e);
        }
        std::vector<ImageRecord> records;
        for (int k = 0; k < 6; ++k) {
            ImageRecord r;
            r.image_id = "i" + std::to_string(k);
            r.patient_id = "p";
            r.eye = k % 2 ? Eye::Right : Eye::Left;
            r.acquired_at = Date{2010 + static_cast<int>(rng.next_below(8)),
                                 1 + static_cast<int>(rng.next_below(12)),
                                 1 + static_cast<int>(rng.next_below(28))};
            r.domain_id = "d";
            records.push_back(r);
        }
        derive_eye_labels(records, events);

        for (const auto& r : records) {
            // per-eye rule trace
            std::optional<Date> first_pos;
            bool suspect = false, neg = false, any = false;
            for (const auto& e : events) {
                const bool hits = e.laterality == Laterality::Both ||
                                  (e.laterality == Laterality::Left && r.eye == Eye::Left) ||
                                  (e.laterality == Laterality::Right && r.eye == Eye::Right);
                if (!hits) continue;
                any = true;
                if (e.category == DiagnosisCategory::GonPositive &&
                    (!first_pos || e.occurred_at < *first_pos))
                    first_pos = e.occurred_at;
                if (e.category == DiagnosisCategory::SuspectOrOHT) suspect = true;
                if (e.category == DiagnosisCategory::GonNegative) neg = true;
            }
            // monotone propagation + pre-diagnosis exclusion
            if (first_pos) {
                const bool want_pos = r.acquired_at >= *first_pos;
                if (want_pos && r.label_state != GonLabel::positive()) ++violations;
                if (!want_pos && (r.label_state.state != GonLabel::State::Excluded ||
                                  r.label_state.reason != ExclusionReason::PreDiagnosis))
                    ++violations;
            } else if (suspect) {
                if (r.label_state.state != GonLabel::State::Excluded) ++violations;
            } else if (neg) {
                if (r.label_state != GonLabel::negative()) ++violations;
            } else if (!any || r.label_state.is_eligible()) {
                // unknown-only or event-free eyes must be excluded
                if (r.label_state.state != GonLabel::State::Excluded) ++violations;
            }
        }
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "violations = %ld / 1000 timelines", violations);
    report(7, "labeling rule-trace property suite", violations == 0, buf);
}

// ---------------------------------------------------- 8 & 10: pipeline runs

PipelineConfig smoke_config(const fs::path& out) {
    PipelineConfig cfg;
    cfg.seed = 808;
    cfg.train.seed = derive_seed(cfg.seed, "train");
    cfg.out_dir = out.string();
    cfg.synth_n_domains = 3;
    cfg.synth_scale = 0.05;
    cfg.train.epochs = 20;
    cfg.eval_iterations = 100;
    return cfg;
}

void run_stages(const PipelineConfig& cfg) {
    cmd_synth(cfg);
    cmd_gate(cfg);
    cmd_split(cfg);
    cmd_train(cfg, TrainMode::Msd, "D2");
    cmd_eval(cfg, "D2");
    cmd_report(cfg);
}

void criterion_determinism() {
    const fs::path out = fs::temp_directory_path() / "gonlab_acceptance_det";
    fs::remove_all(out);
    const auto cfg = smoke_config(out);
    run_stages(cfg);

    std::map<std::string, std::string> first;
    for (const char* sub : {"eval", "report"})
        for (const auto& e : fs::directory_iterator(out / sub)) {
            const auto ext = e.path().extension();
            if (ext == ".json" || ext == ".svg")
                first[(fs::path(sub) / e.path().filename()).string()] = read_file(e.path());
        }

    run_stages(cfg);  // full re-run, same config and seed
    bool identical = !first.empty();
    for (const auto& [rel, body] : first)
        if (read_file(out / rel) != body) identical = false;

    char buf[64];
    std::snprintf(buf, sizeof(buf), "%zu report/eval artifacts compared", first.size());
    report(8, "byte-identical re-run artifacts", identical, buf);
    fs::remove_all(out);
}

void criterion_end_to_end() {
    const fs::path out = fs::temp_directory_path() / "gonlab_acceptance_smoke";
    fs::remove_all(out);
    auto cfg = smoke_config(out);
    cfg.seed = 909;
    cfg.train.seed = derive_seed(cfg.seed, "train");
    bool ok = true;
    std::string detail;
    try {
        run_stages(cfg);

        const std::string table = read_file(out / "report" / "table.txt");
        const std::regex cell(R"(\d\.\d{2} \(\d\.\d{2}-\d\.\d{2}\))");
        const bool cells_ok = std::regex_search(table, cell);

        const std::string flow = read_file(out / "split" / "flow_report.json");
        long ingested = 0, kept = 0, excluded = 0;
        {
            std::smatch m;
            std::regex num(R"("n_ingested"\s*:\s*(\d+))");
            if (std::regex_search(flow, m, num)) ingested = std::stol(m[1]);
            std::regex num2(R"("n_kept"\s*:\s*(\d+))");
            if (std::regex_search(flow, m, num2)) kept = std::stol(m[1]);
            std::regex reason(
                R"re("(pre_diagnosis|suspect|ocular_hypertension|unknown_code|child|low_quality|missing_od|no_diagnosis)"\s*:\s*(\d+))re");
            for (auto it = std::sregex_iterator(flow.begin(), flow.end(), reason);
                 it != std::sregex_iterator(); ++it)
                excluded += std::stol((*it)[2]);
        }
        const bool conserved = ingested > 0 && kept + excluded == ingested;
        ok = cells_ok && conserved;
        char buf[96];
        std::snprintf(buf, sizeof(buf), "cells=%d flow %ld = %ld + %ld", cells_ok, ingested, kept,
                      excluded);
        detail = buf;
    } catch (const std::exception& e) {
        ok = false;
        detail = e.what();
    }
    report(10, "synth->...->report smoke run", ok, detail);
    fs::remove_all(out);
}

// ------------------------------------------------ 9: bootstrap calibration

void criterion_bootstrap_calibration() {
    // binormal scores with population AUC 0.85: pos ~ N(d,1), neg ~ N(0,1),
    // d = sqrt(2) * Phi^-1(0.85)
    const double d_sep = std::sqrt(2.0) * 1.0364333894937898;
    int covered = 0;
    for (int s = 0; s < 100; ++s) {
        Rng rng(derive_seed(0x90CA, "calib", static_cast<uint64_t>(s)));
        LabeledScores data;
        for (int i = 0; i < 1000; ++i) {
            const int y = i < 500 ? 1 : 0;
            data.labels.push_back(y);
            data.scores.push_back(rng.normal(y ? d_sep : 0.0, 1.0));
        }
        const double point = auc(data);
        const auto ci = bootstrap_auc_ci(data, 1000, 0.95, derive_seed(0x90CA, "ci", s));
        if (ci.ci_low <= point && point <= ci.ci_high) ++covered;
    }
    char buf[48];
    std::snprintf(buf, sizeof(buf), "covered %d / 100 seeds", covered);
    report(9, "bootstrap CI calibration", covered >= 95, buf);
}

}  // namespace

int main() {
    criterion_auc_oracle();
    criterion_wilcoxon_exact();
    criterion_formula_oracles();
    criterion_gradient_check();

    std::printf("  [info] featurizing the 7-domain benchmark...\n");
    std::fflush(stdout);
    const auto bench = featurize_benchmark(0xBE7C);
    criterion_msd_vs_ssd(bench);

    criterion_labeling_properties();
    criterion_determinism();
    criterion_bootstrap_calibration();
    criterion_end_to_end();

    std::printf("%d criterion(s) failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
