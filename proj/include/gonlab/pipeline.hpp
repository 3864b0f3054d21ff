#pragma once

#include <string>
#include <vector>

#include "gonlab/learner.hpp"
#include "gonlab/registry.hpp"
#include "gonlab/stats.hpp"
#include "gonlab/synth.hpp"

namespace gonlab {

// All randomness flows from `seed` via named per-stage derivation, so any
// stage can be re-run in isolation and reproduce its artifacts byte for
// byte.
struct PipelineConfig {
    uint64_t seed = 1;
    std::string out_dir = "out";

    int synth_n_domains = 7;
    double synth_scale = 1.0;

    double gate_threshold = 5.0;
    SplitRatios split_ratios;

    TrainConfig train;
    bool use_biometric_features = false;
    bool train_augment = false;

    int eval_iterations = 1000;
    double eval_subsample_frac = 0.95;

    std::string anchor_domain = "D1";

    static PipelineConfig from_file(const std::string& path);
    static PipelineConfig from_json_text(const std::string& text);
    std::string to_json() const;
    // FNV-1a over the canonical (key-sorted) JSON dump; stable under key
    // reordering in the source file.
    uint64_t config_hash() const;
};

// Each command writes its artifacts under cfg.out_dir and registers them
// in run_manifest.json. Re-running a stage with the same config+seed
// overwrites byte-identical outputs.
void cmd_synth(const PipelineConfig& cfg);
void cmd_gate(const PipelineConfig& cfg);
void cmd_split(const PipelineConfig& cfg);

enum class TrainMode { Ssd, Msd };
// SSD trains inside `domain` (the anchor); MSD leaves `domain` out as the
// target. Returns the snapshot path.
std::string cmd_train(const PipelineConfig& cfg, TrainMode mode, const std::string& domain);

// Evaluates every model snapshot under out/models plus the CDR and RDR
// baselines on the target domain's eligible records.
void cmd_eval(const PipelineConfig& cfg, const std::string& target_domain);

void cmd_compare(const PipelineConfig& cfg, const std::string& model_a,
                 const std::string& model_b, const std::string& target_domain);

// Table-II-shaped matrix (models x datasets, "AUC (low-high)" cells) plus
// the exclusion flow report.
void cmd_report(const PipelineConfig& cfg);

// --- helpers shared with tests -----------------------------------------

std::vector<ImageRecord> load_labeled_records(const std::string& path);

// Loads, preprocesses and featurizes the given records from corpus_dir.
FeatureTable build_feature_table(const std::vector<ImageRecord>& records,
                                 const std::string& corpus_dir, const FeatureSpec& spec);

std::string format_auc_cell(double auc, double lo, double hi);  // "0.85 (0.84-0.85)"

std::string roc_svg(const LabeledScores& data);
std::string kde_svg(const LabeledScores& data, double brier_score);

}  // namespace gonlab
