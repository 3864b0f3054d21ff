#pragma once

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gonlab/imaging.hpp"
#include "gonlab/registry.hpp"

namespace gonlab {

class DegenerateSplit : public ValidationError {
public:
    DegenerateSplit() : ValidationError("train or validation set contains only one class") {}
};

struct Prediction {
    std::string image_id;
    std::string model_id;
    double score = 0.0;
};

struct FeatureSpec {
    int blocks = 8;               // pooling grid per side, 3 channels
    bool use_biometrics = false;  // append vcdr, rdr
    int dim() const { return blocks * blocks * 3 + (use_biometrics ? 2 : 0); }
    bool operator==(const FeatureSpec&) const = default;
};

// Block-averaged pooling of the normalized image; the desk-scale stand-in
// for a heavyweight backbone.
std::vector<float> extract_features(const PreprocessedImage& img, const FeatureSpec& spec,
                                    double vcdr = 0.0, double rdr = 0.0);

// Logistic regression scorer. Deterministic at inference; convex
// objective, so zero initialization removes init variance.
struct LogisticModel {
    std::string model_id;
    FeatureSpec feature_spec;
    std::vector<double> weights;  // dim() entries
    double bias = 0.0;

    double predict(const std::vector<float>& features) const;
    std::string to_json() const;
    static LogisticModel from_json(const std::string& text);
};

struct TrainConfig {
    int epochs = 100;
    int batch_size = 32;
    double learning_rate = 0.05;
    uint64_t seed = 0;
    int early_stop_patience = 10;
    AugmentPolicy augment_policy = AugmentPolicy::identity();
    void validate() const;
};

struct Sample {
    std::string image_id;
    int label = 0;  // 0/1
    std::vector<float> features;
};

struct TrainedRun {
    LogisticModel model;              // best-val-AUC snapshot
    std::vector<double> train_loss;   // per epoch
    std::vector<double> val_auc;      // per epoch
    int best_epoch = -1;
    std::string run_record_json() const;
};

// Re-featurizes a training sample for one gradient step, e.g. from an
// augmented copy of the source image. The draw seed is derived from
// (config.seed, epoch, sample), so results do not depend on scheduling.
using FeatureResampler =
    std::function<std::vector<float>(const std::string& image_id, uint64_t draw_seed)>;

// Mini-batch SGD on binary cross-entropy; shuffling driven by
// config.seed; early stopping on validation AUC. When a resampler is
// given and the policy is non-identity, train features are redrawn per
// epoch.
TrainedRun train(LogisticModel model, const std::vector<Sample>& train_set,
                 const std::vector<Sample>& val_set, const TrainConfig& config,
                 const FeatureResampler& resampler = nullptr);

// Featurized dataset keyed by image id; orchestrators look samples up by
// the ids the registry partitions produce.
using FeatureTable = std::unordered_map<std::string, Sample>;

// Single-source-domain: 85:5:10 split inside the anchor domain, train on
// its train portion, early-stop on its val portion.
TrainedRun train_ssd(const std::vector<ImageRecord>& records, const FeatureTable& features,
                     const std::string& source_domain_id, const TrainConfig& config,
                     const FeatureSpec& spec, const FeatureResampler& resampler = nullptr);

// Multi-source-domain (leave-one-domain-out): joint 90/10 train/val over
// all non-target domains; the target domain is never touched.
TrainedRun train_msd(const std::vector<ImageRecord>& records, const FeatureTable& features,
                     const std::string& target_domain_id, const TrainConfig& config,
                     const FeatureSpec& spec, const FeatureResampler& resampler = nullptr);

struct BatchPrediction {
    std::vector<Prediction> predictions;
    std::vector<std::string> errors;  // per-record failures, run continues
};

BatchPrediction predict_batch(
    const LogisticModel& model, const std::vector<std::string>& image_ids,
    const std::function<const Sample*(const std::string&)>& lookup);

}  // namespace gonlab
