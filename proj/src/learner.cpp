#include "gonlab/learner.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gonlab/stats.hpp"

namespace gonlab {

using nlohmann::json;

std::vector<float> extract_features(const PreprocessedImage& img, const FeatureSpec& spec,
                                    double vcdr, double rdr) {
    const int side = kModelInputSide;
    const int b = spec.blocks;
    std::vector<double> acc(static_cast<size_t>(b) * b * 3, 0.0);
    std::vector<long> cnt(static_cast<size_t>(b) * b, 0);
    for (int y = 0; y < side; ++y) {
        const int by = y * b / side;
        for (int x = 0; x < side; ++x) {
            const int bx = x * b / side;
            const size_t cell = static_cast<size_t>(by) * b + bx;
            ++cnt[cell];
            for (int c = 0; c < 3; ++c) acc[cell * 3 + c] += img.at(x, y, c);
        }
    }
    std::vector<float> out;
    out.reserve(static_cast<size_t>(spec.dim()));
    for (size_t cell = 0; cell < cnt.size(); ++cell)
        for (int c = 0; c < 3; ++c)
            out.push_back(static_cast<float>(acc[cell * 3 + c] / cnt[cell]));
    if (spec.use_biometrics) {
        out.push_back(static_cast<float>(vcdr));
        out.push_back(static_cast<float>(rdr));
    }
    return out;
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double dot(const std::vector<double>& w, const std::vector<float>& x) {
    double acc = 0.0;
    for (size_t i = 0; i < w.size(); ++i) acc += w[i] * x[i];
    return acc;
}

bool both_classes(const std::vector<Sample>& set) {
    bool pos = false, neg = false;
    for (const auto& s : set) (s.label ? pos : neg) = true;
    return pos && neg;
}

double val_auc_of(const LogisticModel& m, const std::vector<Sample>& val) {
    LabeledScores data;
    data.scores.reserve(val.size());
    data.labels.reserve(val.size());
    for (const auto& s : val) {
        data.scores.push_back(m.predict(s.features));
        data.labels.push_back(s.label);
    }
    return auc(data);
}

}  // namespace

double LogisticModel::predict(const std::vector<float>& features) const {
    if (features.size() != static_cast<size_t>(feature_spec.dim()))
        throw ValidationError("feature dimension mismatch");
    return sigmoid(dot(weights, features) + bias);
}

std::string LogisticModel::to_json() const {
    json j;
    j["format_version"] = 1;
    j["model_id"] = model_id;
    j["feature_spec"]["blocks"] = feature_spec.blocks;
    j["feature_spec"]["use_biometrics"] = feature_spec.use_biometrics;
    j["weights"] = weights;
    j["bias"] = bias;
    return j.dump(2) + "\n";
}

LogisticModel LogisticModel::from_json(const std::string& text) {
    json j;
    LogisticModel m;
    try {
        j = json::parse(text);
        if (j.value("format_version", 0) != 1)
            throw ValidationError("unsupported model snapshot version");
        m.model_id = j.at("model_id").get<std::string>();
        m.feature_spec.blocks = j.at("feature_spec").at("blocks").get<int>();
        m.feature_spec.use_biometrics = j.at("feature_spec").at("use_biometrics").get<bool>();
        m.weights = j.at("weights").get<std::vector<double>>();
        m.bias = j.at("bias").get<double>();
    } catch (const json::exception& e) {
        throw ValidationError("malformed model snapshot: " + std::string(e.what()));
    }
    if (m.weights.size() != static_cast<size_t>(m.feature_spec.dim()))
        throw ValidationError("model snapshot weight count does not match feature spec");
    return m;
}

void TrainConfig::validate() const {
    if (epochs < 0) throw ValidationError("epochs must be >= 0");
    if (batch_size < 1) throw ValidationError("batch_size must be positive");
    if (learning_rate <= 0.0) throw ValidationError("learning_rate must be positive");
    if (early_stop_patience < 1) throw ValidationError("patience must be positive");
    augment_policy.validate();
}

std::string TrainedRun::run_record_json() const {
    json j;
    j["model_id"] = model.model_id;
    j["best_epoch"] = best_epoch;
    j["train_loss"] = train_loss;
    j["val_auc"] = val_auc;
    return j.dump(2) + "\n";
}

TrainedRun train(LogisticModel model, const std::vector<Sample>& train_set,
                 const std::vector<Sample>& val_set, const TrainConfig& config,
                 const FeatureResampler& resampler) {
    config.validate();
    if (train_set.empty() || val_set.empty())
        throw ValidationError("train and validation sets must be non-empty");
    if (!both_classes(train_set) || !both_classes(val_set)) throw DegenerateSplit();

    const int dim = model.feature_spec.dim();
    if (model.weights.empty()) model.weights.assign(static_cast<size_t>(dim), 0.0);
    if (model.weights.size() != static_cast<size_t>(dim))
        throw ValidationError("model weight count does not match feature spec");
    for (const auto& s : train_set)
        if (s.features.size() != static_cast<size_t>(dim))
            throw ValidationError("train sample feature dimension mismatch: " + s.image_id);

    TrainedRun run;
    run.model = model;
    LogisticModel current = model;
    double best_auc = -1.0;
    int since_best = 0;

    std::vector<size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), size_t{0});

    std::vector<double> grad(static_cast<size_t>(dim));
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng rng(derive_seed(config.seed, "epoch", static_cast<uint64_t>(epoch)));
        rng.shuffle(order);

        double loss_sum = 0.0;
        size_t start = 0;
        while (start < order.size()) {
            const size_t end = std::min(order.size(), start + static_cast<size_t>(config.batch_size));
            std::fill(grad.begin(), grad.end(), 0.0);
            double grad_bias = 0.0;
            for (size_t k = start; k < end; ++k) {
                const Sample& s = train_set[order[k]];
                std::vector<float> redrawn;
                const bool redraw = resampler && !config.augment_policy.is_identity();
                if (redraw)
                    redrawn = resampler(
                        s.image_id,
                        derive_seed(config.seed, "augment",
                                    static_cast<uint64_t>(epoch) * train_set.size() + order[k]));
                const std::vector<float>& feats = redraw ? redrawn : s.features;
                const double p = sigmoid(dot(current.weights, feats) + current.bias);
                const double err = p - s.label;
                for (int i = 0; i < dim; ++i)
                    grad[static_cast<size_t>(i)] += err * feats[static_cast<size_t>(i)];
                grad_bias += err;
                const double eps = 1e-12;
                loss_sum -= s.label ? std::log(p + eps) : std::log(1.0 - p + eps);
            }
            const double scale = config.learning_rate / static_cast<double>(end - start);
            for (int i = 0; i < dim; ++i)
                current.weights[static_cast<size_t>(i)] -= scale * grad[static_cast<size_t>(i)];
            current.bias -= scale * grad_bias;
            start = end;
        }
        run.train_loss.push_back(loss_sum / static_cast<double>(train_set.size()));

        const double va = val_auc_of(current, val_set);
        run.val_auc.push_back(va);
        if (va > best_auc) {
            best_auc = va;
            run.best_epoch = epoch;
            run.model = current;
            since_best = 0;
        } else if (++since_best >= config.early_stop_patience) {
            break;
        }
    }
    return run;
}

namespace {

std::vector<Sample> collect(const FeatureTable& features, const std::vector<std::string>& ids) {
    std::vector<Sample> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        auto it = features.find(id);
        if (it == features.end()) throw ValidationError("no features for record " + id);
        out.push_back(it->second);
    }
    return out;
}

}  // namespace

TrainedRun train_ssd(const std::vector<ImageRecord>& records, const FeatureTable& features,
                     const std::string& source_domain_id, const TrainConfig& config,
                     const FeatureSpec& spec, const FeatureResampler& resampler) {
    std::vector<ImageRecord> domain_records;
    for (const auto& r : records)
        if (r.domain_id == source_domain_id && r.label_state.is_eligible())
            domain_records.push_back(r);
    if (domain_records.empty())
        throw ValidationError("source domain '" + source_domain_id + "' has no eligible records");

    const auto split = stratified_split(domain_records, SplitRatios{}, derive_seed(config.seed, "ssd_split"));
    std::vector<std::string> train_ids, val_ids;
    for (const auto& [iid, s] : split.by_image) {
        if (s == Split::Train) train_ids.push_back(iid);
        if (s == Split::Val) val_ids.push_back(iid);
    }
    LogisticModel model;
    model.model_id = "ssd_" + source_domain_id + "_seed" + std::to_string(config.seed);
    model.feature_spec = spec;
    return train(std::move(model), collect(features, train_ids), collect(features, val_ids),
                 config, resampler);
}

TrainedRun train_msd(const std::vector<ImageRecord>& records, const FeatureTable& features,
                     const std::string& target_domain_id, const TrainConfig& config,
                     const FeatureSpec& spec, const FeatureResampler& resampler) {
    const auto part =
        lodo_partition(records, target_domain_id, 0.10, derive_seed(config.seed, "msd_split"));
    // leakage guard: the target ids must not appear in train or val
    for (const auto& id : part.target)
        if (std::binary_search(part.train.begin(), part.train.end(), id) ||
            std::binary_search(part.val.begin(), part.val.end(), id))
            throw ValidationError("target record leaked into training pool: " + id);
    LogisticModel model;
    model.model_id = "msd_target_" + target_domain_id + "_seed" + std::to_string(config.seed);
    model.feature_spec = spec;
    return train(std::move(model), collect(features, part.train), collect(features, part.val),
                 config, resampler);
}

BatchPrediction predict_batch(
    const LogisticModel& model, const std::vector<std::string>& image_ids,
    const std::function<const Sample*(const std::string&)>& lookup) {
    BatchPrediction out;
    for (const auto& id : image_ids) {
        const Sample* s = nullptr;
        try {
            s = lookup(id);
        } catch (const std::exception& e) {
            out.errors.push_back(id + ": " + e.what());
            continue;
        }
        if (!s) {
            out.errors.push_back(id + ": record unreadable");
            continue;
        }
        out.predictions.push_back({id, model.model_id, model.predict(s->features)});
    }
    return out;
}

}  // namespace gonlab
