#include "gonlab/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gonlab/biometrics.hpp"
#include "gonlab/gate.hpp"
#include "gonlab/imaging.hpp"

namespace gonlab {

using nlohmann::json;
namespace fs = std::filesystem;

// --- config ---------------------------------------------------------------

PipelineConfig PipelineConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

PipelineConfig PipelineConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError("malformed config JSON: " + std::string(e.what()));
    }
    PipelineConfig cfg;
    if (!j.contains("seed")) throw ValidationError("config must set a seed");
    cfg.seed = j.at("seed").get<uint64_t>();
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    if (j.contains("synth")) {
        cfg.synth_n_domains = j["synth"].value("n_domains", cfg.synth_n_domains);
        cfg.synth_scale = j["synth"].value("scale", cfg.synth_scale);
    }
    if (j.contains("gate")) cfg.gate_threshold = j["gate"].value("threshold", cfg.gate_threshold);
    if (j.contains("split") && j["split"].contains("ratios")) {
        const auto& r = j["split"]["ratios"];
        cfg.split_ratios = SplitRatios{r.at(0).get<double>(), r.at(1).get<double>(),
                                       r.at(2).get<double>()};
        cfg.split_ratios.validate();
    }
    if (j.contains("train")) {
        const auto& t = j["train"];
        cfg.train.epochs = t.value("epochs", cfg.train.epochs);
        cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
        cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
        cfg.train.early_stop_patience = t.value("patience", cfg.train.early_stop_patience);
        cfg.use_biometric_features = t.value("use_biometrics", cfg.use_biometric_features);
        cfg.train_augment = t.value("augment", cfg.train_augment);
    }
    if (j.contains("eval")) {
        cfg.eval_iterations = j["eval"].value("iterations", cfg.eval_iterations);
        cfg.eval_subsample_frac = j["eval"].value("subsample_frac", cfg.eval_subsample_frac);
    }
    cfg.anchor_domain = j.value("anchor_domain", cfg.anchor_domain);
    cfg.train.seed = derive_seed(cfg.seed, "train");
    return cfg;
}

std::string PipelineConfig::to_json() const {
    json j;
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    j["synth"]["n_domains"] = synth_n_domains;
    j["synth"]["scale"] = synth_scale;
    j["gate"]["threshold"] = gate_threshold;
    j["split"]["ratios"] = {split_ratios.train, split_ratios.val, split_ratios.test};
    j["train"]["epochs"] = train.epochs;
    j["train"]["batch_size"] = train.batch_size;
    j["train"]["learning_rate"] = train.learning_rate;
    j["train"]["patience"] = train.early_stop_patience;
    j["train"]["use_biometrics"] = use_biometric_features;
    j["train"]["augment"] = train_augment;
    j["eval"]["iterations"] = eval_iterations;
    j["eval"]["subsample_frac"] = eval_subsample_frac;
    j["anchor_domain"] = anchor_domain;
    return j.dump(2) + "\n";
}

uint64_t PipelineConfig::config_hash() const { return fnv1a64(to_json()); }

// --- run manifest -----------------------------------------------------------

namespace {

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << text;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void register_artifacts(const PipelineConfig& cfg, const std::string& command,
                        const std::vector<fs::path>& files) {
    const fs::path manifest_path = fs::path(cfg.out_dir) / "run_manifest.json";
    json j;
    if (fs::exists(manifest_path)) j = json::parse(read_text(manifest_path));
    char hash_buf[32];
    std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                  static_cast<unsigned long long>(cfg.config_hash()));
    j["config_hash"] = hash_buf;
    j["version"] = 1;
    j["updated_at"] = static_cast<long>(time(nullptr));
    for (const auto& f : files) {
        char fh[32];
        std::snprintf(fh, sizeof(fh), "%016llx",
                      static_cast<unsigned long long>(fnv1a64(read_text(f))));
        j["artifacts"][fs::relative(f, cfg.out_dir).string()] = {{"command", command},
                                                                 {"hash", fh}};
    }
    write_text(manifest_path, j.dump(2) + "\n");
}

fs::path corpus_dir(const PipelineConfig& cfg) { return fs::path(cfg.out_dir) / "corpus"; }

void require_artifact(const fs::path& p, const std::string& producing_command) {
    if (!fs::exists(p))
        throw ValidationError("missing artifact " + p.string() + "; run `" + producing_command +
                              "` first");
}

}  // namespace

// --- stages -------------------------------------------------------------------

void cmd_synth(const PipelineConfig& cfg) {
    const auto corpora =
        generate_benchmark(cfg.synth_n_domains, derive_seed(cfg.seed, "synth"), cfg.synth_scale);
    const auto dir = corpus_dir(cfg);
    fs::create_directories(dir);
    std::vector<fs::path> files;
    bool append = false;
    for (const auto& corpus : corpora) {
        write_corpus(corpus, dir.string(), append);
        append = true;
    }
    for (const char* f : {"manifest.jsonl", "diagnoses.jsonl", "truth.csv", "code_map.json"})
        files.push_back(dir / f);
    register_artifacts(cfg, "synth", files);
}

void cmd_gate(const PipelineConfig& cfg) {
    const auto dir = corpus_dir(cfg);
    require_artifact(dir / "manifest.jsonl", "synth");
    const auto records = ingest_manifest((dir / "manifest.jsonl").string());

    std::vector<GateResult> results;
    results.reserve(records.size());
    long n_low = 0, n_missing = 0;
    for (const auto& r : records) {
        const RgbImage img = read_image((dir / r.image_path).string());
        GateInput in;
        in.image_id = r.image_id;
        in.image = &img;
        SegmentationMask mask;
        if (r.mask_path) {
            mask = read_mask((dir / *r.mask_path).string());
            in.mask = &mask;
        }
        auto summary = run_gate({in}, cfg.gate_threshold);
        results.push_back(summary.results[0]);
        n_low += summary.n_low_quality;
        n_missing += summary.n_missing_od;
    }
    const fs::path out = fs::path(cfg.out_dir) / "gate" / "gate_results.csv";
    write_text(out, gate_results_csv(results));
    register_artifacts(cfg, "gate", {out});
}

void cmd_split(const PipelineConfig& cfg) {
    const auto dir = corpus_dir(cfg);
    require_artifact(dir / "manifest.jsonl", "synth");
    const fs::path gate_csv = fs::path(cfg.out_dir) / "gate" / "gate_results.csv";
    require_artifact(gate_csv, "gate");

    auto records = ingest_manifest((dir / "manifest.jsonl").string());
    const auto code_map = load_code_map((dir / "code_map.json").string());
    const auto events = ingest_diagnoses((dir / "diagnoses.jsonl").string(), code_map);
    derive_eye_labels(records, events);

    std::unordered_map<std::string, GateResult> gate_by_id;
    for (auto& g : parse_gate_results_csv(read_text(gate_csv))) gate_by_id[g.image_id] = g;
    apply_exclusions(records, gate_by_id);

    // labeled records, one JSON line each
    std::ostringstream labeled;
    for (const auto& r : records) {
        json j;
        j["image_id"] = r.image_id;
        j["patient_id"] = r.patient_id;
        j["eye"] = r.eye == Eye::Left ? "L" : "R";
        j["acquired_at"] = r.acquired_at.to_string();
        j["domain"] = r.domain_id;
        j["image_path"] = r.image_path;
        if (r.mask_path) j["mask_path"] = *r.mask_path;
        if (r.age_years) j["age_years"] = *r.age_years;
        if (r.sex) j["sex"] = *r.sex == Sex::M ? "M" : "F";
        switch (r.label_state.state) {
            case GonLabel::State::Positive: j["label"] = "pos"; break;
            case GonLabel::State::Negative: j["label"] = "neg"; break;
            default: j["label"] = "excluded:" + to_string(*r.label_state.reason);
        }
        labeled << j.dump() << "\n";
    }
    const fs::path labeled_path = fs::path(cfg.out_dir) / "split" / "labeled.jsonl";
    write_text(labeled_path, labeled.str());

    const auto flow = flow_report(records);
    json fj;
    fj["n_ingested"] = flow.n_ingested;
    fj["n_kept"] = flow.n_kept;
    fj["excluded_by_reason"] = flow.excluded_by_reason;
    const fs::path flow_path = fs::path(cfg.out_dir) / "split" / "flow_report.json";
    write_text(flow_path, fj.dump(2) + "\n");

    std::vector<ImageRecord> eligible;
    for (const auto& r : records)
        if (r.label_state.is_eligible()) eligible.push_back(r);
    const auto split = stratified_split(eligible, cfg.split_ratios, derive_seed(cfg.seed, "split"));
    const fs::path split_path = fs::path(cfg.out_dir) / "split" / "split.json";
    write_text(split_path, split_assignment_json(split));

    register_artifacts(cfg, "split", {labeled_path, flow_path, split_path});
}

std::vector<ImageRecord> load_labeled_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open labeled records: " + path);
    std::vector<ImageRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        ImageRecord r;
        r.image_id = j.at("image_id").get<std::string>();
        r.patient_id = j.at("patient_id").get<std::string>();
        r.eye = j.at("eye").get<std::string>() == "L" ? Eye::Left : Eye::Right;
        r.acquired_at = Date::parse(j.at("acquired_at").get<std::string>());
        r.domain_id = j.at("domain").get<std::string>();
        r.image_path = j.at("image_path").get<std::string>();
        if (j.contains("mask_path")) r.mask_path = j["mask_path"].get<std::string>();
        if (j.contains("age_years")) r.age_years = j["age_years"].get<int>();
        if (j.contains("sex")) r.sex = j["sex"].get<std::string>() == "M" ? Sex::M : Sex::F;
        const std::string label = j.at("label").get<std::string>();
        if (label == "pos")
            r.label_state = GonLabel::positive();
        else if (label == "neg")
            r.label_state = GonLabel::negative();
        else
            r.label_state = GonLabel::excluded(ExclusionReason::NoDiagnosis);  // reason unused here
        records.push_back(std::move(r));
    }
    return records;
}

FeatureTable build_feature_table(const std::vector<ImageRecord>& records,
                                 const std::string& dir, const FeatureSpec& spec) {
    FeatureTable table;
    for (const auto& r : records) {
        if (!r.label_state.is_eligible()) continue;
        const RgbImage img = read_image((fs::path(dir) / r.image_path).string());
        double vcdr_v = 0.0, rdr_v = 0.0;
        if (spec.use_biometrics && r.mask_path) {
            const auto bio = compute_biometrics(read_mask((fs::path(dir) / *r.mask_path).string()));
            vcdr_v = bio.vcdr;
            rdr_v = bio.rdr;
        }
        Sample s;
        s.image_id = r.image_id;
        s.label = r.label_state.state == GonLabel::State::Positive ? 1 : 0;
        s.features = extract_features(preprocess(img), spec, vcdr_v, rdr_v);
        table[r.image_id] = std::move(s);
    }
    return table;
}

std::string cmd_train(const PipelineConfig& cfg, TrainMode mode, const std::string& domain) {
    const fs::path labeled_path = fs::path(cfg.out_dir) / "split" / "labeled.jsonl";
    require_artifact(labeled_path, "split");
    auto records = load_labeled_records(labeled_path.string());

    FeatureSpec spec;
    spec.use_biometrics = cfg.use_biometric_features;

    // The partition helpers see every eligible record (lodo needs the target
    // domain present to reserve it); features are only built for records a
    // gradient or validation step can actually touch.
    std::vector<ImageRecord> eligible, involved;
    for (const auto& r : records) {
        if (!r.label_state.is_eligible()) continue;
        eligible.push_back(r);
        if (mode == TrainMode::Ssd ? r.domain_id == domain : r.domain_id != domain)
            involved.push_back(r);
    }
    const auto features = build_feature_table(involved, corpus_dir(cfg).string(), spec);

    TrainConfig tc = cfg.train;
    FeatureResampler resampler;
    if (!cfg.train_augment) {
        tc.augment_policy = AugmentPolicy::identity();
    } else {
        std::unordered_map<std::string, ImageRecord> by_id;
        for (const auto& r : involved) by_id[r.image_id] = r;
        const std::string dir = corpus_dir(cfg).string();
        resampler = [by_id, dir, spec, tc](const std::string& id, uint64_t draw_seed) {
            const auto& rec = by_id.at(id);
            const RgbImage img = read_image((fs::path(dir) / rec.image_path).string());
            double vcdr_v = 0.0, rdr_v = 0.0;
            if (spec.use_biometrics && rec.mask_path) {
                const auto bio =
                    compute_biometrics(read_mask((fs::path(dir) / *rec.mask_path).string()));
                vcdr_v = bio.vcdr;
                rdr_v = bio.rdr;
            }
            return extract_features(preprocess_augmented(img, tc.augment_policy, draw_seed),
                                    spec, vcdr_v, rdr_v);
        };
    }
    const auto run = mode == TrainMode::Ssd
                         ? train_ssd(eligible, features, domain, tc, spec, resampler)
                         : train_msd(eligible, features, domain, tc, spec, resampler);

    const fs::path model_path =
        fs::path(cfg.out_dir) / "models" / (run.model.model_id + ".json");
    write_text(model_path, run.model.to_json());
    const fs::path run_path = fs::path(cfg.out_dir) / "models" / (run.model.model_id + "_run.json");
    write_text(run_path, run.run_record_json());
    register_artifacts(cfg, "train", {model_path, run_path});
    return model_path.string();
}

namespace {

LabeledScores collect_scores(const std::vector<Prediction>& preds,
                             const std::unordered_map<std::string, int>& labels) {
    LabeledScores data;
    for (const auto& p : preds) {
        data.scores.push_back(p.score);
        data.labels.push_back(labels.at(p.image_id));
    }
    return data;
}

}  // namespace

void cmd_eval(const PipelineConfig& cfg, const std::string& target_domain) {
    const fs::path labeled_path = fs::path(cfg.out_dir) / "split" / "labeled.jsonl";
    require_artifact(labeled_path, "split");
    const fs::path models_dir = fs::path(cfg.out_dir) / "models";
    if (!fs::exists(models_dir) || fs::is_empty(models_dir))
        throw ValidationError("model snapshot not found; run `train` first");

    auto records = load_labeled_records(labeled_path.string());
    std::vector<ImageRecord> target;
    for (const auto& r : records)
        if (r.domain_id == target_domain && r.label_state.is_eligible()) target.push_back(r);
    if (target.empty())
        throw ValidationError("no eligible records in target domain " + target_domain);
    std::sort(target.begin(), target.end(),
              [](const ImageRecord& a, const ImageRecord& b) { return a.image_id < b.image_id; });

    std::unordered_map<std::string, int> labels;
    for (const auto& r : target)
        labels[r.image_id] = r.label_state.state == GonLabel::State::Positive ? 1 : 0;

    const uint64_t eval_seed = derive_seed(cfg.seed, "eval/" + target_domain);
    std::vector<fs::path> produced;
    const fs::path eval_dir = fs::path(cfg.out_dir) / "eval";

    auto emit = [&](const std::string& model_id, const LabeledScores& data,
                    const std::vector<Prediction>& preds) {
        const auto report = evaluate(data, model_id, target_domain, cfg.eval_iterations,
                                     cfg.eval_subsample_frac, eval_seed);
        const std::string stem = model_id + "__" + target_domain;
        write_text(eval_dir / (stem + ".json"), eval_report_json(report));
        std::ostringstream pred_csv;
        pred_csv << "image_id,model_id,score\n";
        char row[256];
        for (const auto& p : preds) {
            std::snprintf(row, sizeof(row), "%s,%s,%.9f\n", p.image_id.c_str(),
                          p.model_id.c_str(), p.score);
            pred_csv << row;
        }
        write_text(eval_dir / (stem + "_predictions.csv"), pred_csv.str());
        write_text(eval_dir / (stem + "_roc.svg"), roc_svg(data));
        write_text(eval_dir / (stem + "_kde.svg"), kde_svg(data, report.brier));
        for (const char* suffix : {".json", "_predictions.csv", "_roc.svg", "_kde.svg"})
            produced.push_back(eval_dir / (stem + suffix));
    };

    // learned models
    std::vector<std::string> target_ids;
    for (const auto& r : target) target_ids.push_back(r.image_id);
    std::vector<fs::path> model_files;
    for (const auto& e : fs::directory_iterator(models_dir)) {
        const auto name = e.path().filename().string();
        if (name.ends_with(".json") && !name.ends_with("_run.json"))
            model_files.push_back(e.path());
    }
    std::sort(model_files.begin(), model_files.end());
    FeatureTable features;  // cached across models sharing a feature spec
    FeatureSpec cached_spec;
    for (const auto& mf : model_files) {
        const auto model = LogisticModel::from_json(read_text(mf));
        if (features.empty() || !(model.feature_spec == cached_spec)) {
            features = build_feature_table(target, corpus_dir(cfg).string(), model.feature_spec);
            cached_spec = model.feature_spec;
        }
        const auto batch = predict_batch(
            model, target_ids, [&](const std::string& id) -> const Sample* {
                auto it = features.find(id);
                return it == features.end() ? nullptr : &it->second;
            });
        emit(model.model_id, collect_scores(batch.predictions, labels), batch.predictions);
    }

    // CDR / RDR baselines from the masks
    std::vector<Prediction> cdr_preds, rdr_preds;
    for (const auto& r : target) {
        if (!r.mask_path) continue;
        const auto bio =
            compute_biometrics(read_mask((corpus_dir(cfg) / *r.mask_path).string()));
        cdr_preds.push_back({r.image_id, "cdr_baseline", baseline_score(bio, BaselineKind::Cdr)});
        rdr_preds.push_back({r.image_id, "rdr_baseline", baseline_score(bio, BaselineKind::Rdr)});
    }
    if (!cdr_preds.empty()) {
        emit("cdr_baseline", collect_scores(cdr_preds, labels), cdr_preds);
        emit("rdr_baseline", collect_scores(rdr_preds, labels), rdr_preds);
    }
    register_artifacts(cfg, "eval", produced);
}

void cmd_compare(const PipelineConfig& cfg, const std::string& model_a,
                 const std::string& model_b, const std::string& target_domain) {
    const fs::path eval_dir = fs::path(cfg.out_dir) / "eval";
    auto load_preds = [&](const std::string& model_id) {
        const fs::path p = eval_dir / (model_id + "__" + target_domain + "_predictions.csv");
        require_artifact(p, "eval");
        std::istringstream in(read_text(p));
        std::string line;
        std::getline(in, line);  // header
        std::vector<std::pair<std::string, double>> preds;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ls(line);
            std::string id, mid, score;
            std::getline(ls, id, ',');
            std::getline(ls, mid, ',');
            std::getline(ls, score, ',');
            preds.emplace_back(id, std::stod(score));
        }
        std::sort(preds.begin(), preds.end());
        return preds;
    };
    const auto pa = load_preds(model_a);
    const auto pb = load_preds(model_b);
    if (pa.size() != pb.size()) throw ValidationError("prediction sets differ in size");
    std::vector<std::string> mismatched;
    for (size_t i = 0; i < pa.size(); ++i)
        if (pa[i].first != pb[i].first) mismatched.push_back(pa[i].first);
    if (!mismatched.empty()) {
        std::string msg = "prediction ids do not align:";
        for (const auto& id : mismatched) msg += " " + id;
        throw ValidationError(msg);
    }

    const auto records =
        load_labeled_records((fs::path(cfg.out_dir) / "split" / "labeled.jsonl").string());
    std::unordered_map<std::string, int> labels;
    for (const auto& r : records)
        if (r.label_state.is_eligible())
            labels[r.image_id] = r.label_state.state == GonLabel::State::Positive ? 1 : 0;

    std::vector<double> sa, sb;
    std::vector<int> l;
    for (size_t i = 0; i < pa.size(); ++i) {
        sa.push_back(pa[i].second);
        sb.push_back(pb[i].second);
        l.push_back(labels.at(pa[i].first));
    }
    auto result = compare_models(sa, sb, l, cfg.eval_iterations, cfg.eval_subsample_frac,
                                 derive_seed(cfg.seed, "compare/" + target_domain));
    result.model_a = model_a;
    result.model_b = model_b;
    const fs::path out = fs::path(cfg.out_dir) / "compare" /
                         (model_a + "__vs__" + model_b + "__" + target_domain + ".json");
    write_text(out, comparison_json(result));
    register_artifacts(cfg, "compare", {out});
}

std::string format_auc_cell(double auc_v, double lo, double hi) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f (%.2f-%.2f)", auc_v, lo, hi);
    return buf;
}

void cmd_report(const PipelineConfig& cfg) {
    const fs::path eval_dir = fs::path(cfg.out_dir) / "eval";
    require_artifact(eval_dir, "eval");

    // gather reports: matrix rows = models, columns = datasets
    std::map<std::string, std::map<std::string, EvalReport>> matrix;
    std::vector<std::string> datasets;
    for (const auto& e : fs::directory_iterator(eval_dir)) {
        const auto name = e.path().filename().string();
        if (!name.ends_with(".json")) continue;
        const json j = json::parse(read_text(e.path()));
        EvalReport r;
        r.model_id = j.at("model_id").get<std::string>();
        r.dataset_id = j.at("dataset_id").get<std::string>();
        r.auc = j.at("auc").get<double>();
        r.ci_low = j.at("ci_low").get<double>();
        r.ci_high = j.at("ci_high").get<double>();
        r.brier = j.at("brier").get<double>();
        r.n = j.at("n").get<long>();
        r.n_positive = j.at("n_positive").get<long>();
        matrix[r.model_id][r.dataset_id] = r;
        if (std::find(datasets.begin(), datasets.end(), r.dataset_id) == datasets.end())
            datasets.push_back(r.dataset_id);
    }
    if (matrix.empty()) throw ValidationError("no eval reports found; run `eval` first");
    std::sort(datasets.begin(), datasets.end());

    json table;
    table["datasets"] = datasets;
    std::ostringstream txt;
    txt << "model";
    for (const auto& d : datasets) txt << "\t" << d;
    txt << "\n";
    for (const auto& [model, row] : matrix) {
        txt << model;
        for (const auto& d : datasets) {
            auto it = row.find(d);
            const std::string cell =
                it == row.end() ? "-"
                                : format_auc_cell(it->second.auc, it->second.ci_low,
                                                  it->second.ci_high);
            table["cells"][model][d] = cell;
            txt << "\t" << cell;
        }
        txt << "\n";
    }
    const fs::path table_json = fs::path(cfg.out_dir) / "report" / "table.json";
    write_text(table_json, table.dump(2) + "\n");
    const fs::path table_txt = fs::path(cfg.out_dir) / "report" / "table.txt";
    write_text(table_txt, txt.str());

    // conservation check against the split-stage flow report
    const fs::path flow_path = fs::path(cfg.out_dir) / "split" / "flow_report.json";
    require_artifact(flow_path, "split");
    const json flow = json::parse(read_text(flow_path));
    long total = flow.at("n_kept").get<long>();
    for (const auto& [reason, count] : flow.at("excluded_by_reason").items())
        total += count.get<long>();
    if (total != flow.at("n_ingested").get<long>())
        throw ValidationError("flow report does not conserve record counts");
    const fs::path flow_copy = fs::path(cfg.out_dir) / "report" / "flow_report.json";
    write_text(flow_copy, flow.dump(2) + "\n");

    register_artifacts(cfg, "report", {table_json, table_txt, flow_copy});
}

// --- SVG plots -----------------------------------------------------------------

namespace {

constexpr int kPlotSize = 480;
constexpr int kMargin = 50;

double px(double unit) { return kMargin + unit * (kPlotSize - 2 * kMargin); }
double py(double unit) { return kPlotSize - kMargin - unit * (kPlotSize - 2 * kMargin); }

std::string svg_header() {
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kPlotSize << "\" height=\""
      << kPlotSize << "\" viewBox=\"0 0 " << kPlotSize << " " << kPlotSize << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    return s.str();
}

std::string polyline(const std::vector<std::pair<double, double>>& pts, const char* color) {
    std::ostringstream s;
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    char buf[64];
    for (const auto& [x, y] : pts) {
        std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px(x), py(y));
        s << buf;
    }
    s << "\"/>\n";
    return s.str();
}

std::string axes(const char* xlabel, const char* ylabel) {
    std::ostringstream s;
    s << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\""
      << py(0) << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(0) << "\" y2=\""
      << py(1) << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << px(0.5) << "\" y=\"" << kPlotSize - 12
      << "\" text-anchor=\"middle\" font-size=\"13\">" << xlabel << "</text>\n"
      << "<text x=\"14\" y=\"" << py(0.5) << "\" text-anchor=\"middle\" font-size=\"13\" "
      << "transform=\"rotate(-90 14 " << py(0.5) << ")\">" << ylabel << "</text>\n";
    return s.str();
}

}  // namespace

std::string roc_svg(const LabeledScores& data) {
    // threshold sweep from the sorted unique scores
    std::vector<size_t> order(data.scores.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return data.scores[a] > data.scores[b]; });
    const double n_pos = static_cast<double>(data.n_positive());
    const double n_neg = static_cast<double>(data.labels.size()) - n_pos;

    std::vector<std::pair<double, double>> pts{{0.0, 0.0}};
    double tp = 0, fp = 0;
    for (size_t k = 0; k < order.size(); ++k) {
        (data.labels[order[k]] == 1 ? tp : fp) += 1.0;
        const bool tie_next =
            k + 1 < order.size() && data.scores[order[k + 1]] == data.scores[order[k]];
        if (!tie_next) pts.emplace_back(fp / n_neg, tp / n_pos);
    }
    std::string svg = svg_header();
    svg += axes("false positive rate", "true positive rate");
    svg += polyline({{0.0, 0.0}, {1.0, 1.0}}, "#bbbbbb");
    svg += polyline(pts, "#c62828");
    svg += "</svg>\n";
    return svg;
}

std::string kde_svg(const LabeledScores& data, double brier_score) {
    std::vector<double> pos, neg;
    for (size_t i = 0; i < data.scores.size(); ++i)
        (data.labels[i] == 1 ? pos : neg).push_back(data.scores[i]);

    std::string svg = svg_header();
    svg += axes("prediction score", "density");
    double dmax = 1e-9;
    std::vector<DensityCurve> curves;
    for (const auto* vals : {&neg, &pos}) {
        if (vals->size() >= 2) {
            curves.push_back(kde(*vals, 256));
            for (double d : curves.back().density) dmax = std::max(dmax, d);
        } else {
            curves.emplace_back();
        }
    }
    const char* colors[] = {"#1565c0", "#c62828"};  // neg blue, pos red
    for (size_t c = 0; c < curves.size(); ++c) {
        if (curves[c].x.empty()) continue;
        std::vector<std::pair<double, double>> pts;
        for (size_t i = 0; i < curves[c].x.size(); ++i)
            pts.emplace_back(curves[c].x[i], curves[c].density[i] / dmax);
        svg += polyline(pts, colors[c]);
    }
    char note[96];
    std::snprintf(note, sizeof(note),
                  "<text x=\"%d\" y=\"%d\" font-size=\"13\">Brier = %.3f</text>\n", kMargin + 8,
                  kMargin + 8, brier_score);
    svg += note;
    svg += "</svg>\n";
    return svg;
}

}  // namespace gonlab
