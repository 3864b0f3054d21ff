#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gonlab/pipeline.hpp"

using namespace gonlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

PipelineConfig tiny_config(const fs::path& out) {
    PipelineConfig cfg;
    cfg.seed = 404;
    cfg.out_dir = out.string();
    cfg.synth_n_domains = 3;
    cfg.synth_scale = 0.04;  // anchor ~120 images, satellites at the floor
    cfg.train.epochs = 15;
    cfg.eval_iterations = 50;
    return cfg;
}

}  // namespace

TEST_CASE("config round-trips through JSON and hashes canonically") {
    PipelineConfig cfg;
    cfg.seed = 99;
    cfg.out_dir = "elsewhere";
    cfg.gate_threshold = 6.5;
    cfg.train.epochs = 12;
    cfg.use_biometric_features = true;
    const auto back = PipelineConfig::from_json_text(cfg.to_json());
    CHECK(back.seed == 99);
    CHECK(back.out_dir == "elsewhere");
    CHECK(back.gate_threshold == 6.5);
    CHECK(back.train.epochs == 12);
    CHECK(back.use_biometric_features);
    CHECK(back.config_hash() == cfg.config_hash());

    // key order in the source text does not change the hash
    const auto a = PipelineConfig::from_json_text(R"({"seed": 5, "out_dir": "x"})");
    const auto b = PipelineConfig::from_json_text(R"({"out_dir": "x", "seed": 5})");
    CHECK(a.config_hash() == b.config_hash());
    const auto c = PipelineConfig::from_json_text(R"({"out_dir": "x", "seed": 6})");
    CHECK(a.config_hash() != c.config_hash());
}

TEST_CASE("config requires a seed") {
    CHECK_THROWS_AS(PipelineConfig::from_json_text(R"({"out_dir": "x"})"), ValidationError);
    CHECK_THROWS_AS(PipelineConfig::from_json_text("{broken"), ValidationError);
}

TEST_CASE("format_auc_cell matches the report layout") {
    CHECK(format_auc_cell(0.85, 0.84, 0.85) == "0.85 (0.84-0.85)");
    CHECK(format_auc_cell(0.7449, 0.7012, 0.7951) == "0.74 (0.70-0.80)");
}

TEST_CASE("the staged pipeline runs end to end on a tiny corpus") {
    const fs::path out = fs::temp_directory_path() / "gonlab_pipe_test";
    fs::remove_all(out);
    auto cfg = tiny_config(out);

    cmd_synth(cfg);
    CHECK(fs::exists(out / "corpus" / "manifest.jsonl"));

    cmd_gate(cfg);
    const fs::path gate_csv = out / "gate" / "gate_results.csv";
    REQUIRE(fs::exists(gate_csv));

    cmd_split(cfg);
    const fs::path labeled = out / "split" / "labeled.jsonl";
    REQUIRE(fs::exists(labeled));
    CHECK(fs::exists(out / "split" / "flow_report.json"));
    CHECK(fs::exists(out / "split" / "split.json"));

    SUBCASE("eval before train fails with a pointed message") {
        try {
            cmd_eval(cfg, "D2");
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find("train") != std::string::npos);
        }
    }

    const std::string ssd_path = cmd_train(cfg, TrainMode::Ssd, "D1");
    REQUIRE(fs::exists(ssd_path));
    const std::string msd_path = cmd_train(cfg, TrainMode::Msd, "D2");
    REQUIRE(fs::exists(msd_path));

    // snapshots reload into working models
    const auto ssd = LogisticModel::from_json(slurp(ssd_path));
    CHECK(ssd.model_id.find("ssd_D1") == 0);
    CHECK(static_cast<int>(ssd.weights.size()) == ssd.feature_spec.dim());

    cmd_eval(cfg, "D2");
    const fs::path eval_dir = out / "eval";
    REQUIRE(fs::exists(eval_dir));
    long n_reports = 0, n_svg = 0, n_csv = 0;
    for (const auto& e : fs::directory_iterator(eval_dir)) {
        const auto name = e.path().filename().string();
        if (e.path().extension() == ".json") ++n_reports;
        if (e.path().extension() == ".svg") ++n_svg;
        if (e.path().extension() == ".csv") ++n_csv;
    }
    // two trained models + two baselines, each with a report, predictions
    // CSV, ROC svg and KDE svg
    CHECK(n_reports == 4);
    CHECK(n_csv == 4);
    CHECK(n_svg == 8);

    cmd_compare(cfg, ssd.model_id, "msd_target_D2_seed" + std::to_string(cfg.train.seed), "D2");
    bool found_cmp = false;
    for (const auto& e : fs::directory_iterator(out / "compare"))
        if (e.path().extension() == ".json") found_cmp = true;
    CHECK(found_cmp);

    cmd_report(cfg);
    CHECK(fs::exists(out / "report" / "table.json"));
    CHECK(fs::exists(out / "report" / "table.txt"));
    CHECK(fs::exists(out / "run_manifest.json"));
    // the text table carries the two-decimal AUC-with-CI cells
    const std::string table = slurp(out / "report" / "table.txt");
    CHECK(table.find('(') != std::string::npos);
    CHECK(table.find('-') != std::string::npos);

    SUBCASE("re-running eval reproduces report artifacts byte for byte") {
        std::map<std::string, std::string> before;
        for (const auto& e : fs::directory_iterator(eval_dir))
            before[e.path().filename().string()] = slurp(e.path());
        cmd_eval(cfg, "D2");
        for (const auto& [name, body] : before)
            CHECK(slurp(eval_dir / name) == body);
    }

    fs::remove_all(out);
}

TEST_CASE("load_labeled_records restores label state") {
    const fs::path out = fs::temp_directory_path() / "gonlab_pipe_labels";
    fs::remove_all(out);
    auto cfg = tiny_config(out);
    cfg.synth_n_domains = 2;
    cmd_synth(cfg);
    cmd_gate(cfg);
    cmd_split(cfg);
    const auto records = load_labeled_records((out / "split" / "labeled.jsonl").string());
    CHECK(!records.empty());
    long eligible = 0, excluded = 0;
    for (const auto& r : records) {
        if (r.label_state.is_eligible())
            ++eligible;
        else if (r.label_state.state == GonLabel::State::Excluded)
            ++excluded;
        else
            FAIL("record left unlabeled");
    }
    CHECK(eligible > 0);
    CHECK(excluded > 0);  // the generator plants children/suspects/pre-diagnosis shots
    fs::remove_all(out);
}

TEST_CASE("roc and kde SVGs are well-formed and deterministic") {
    LabeledScores d;
    Rng rng(5);
    for (int i = 0; i < 80; ++i) {
        const int y = rng.bernoulli(0.5) ? 1 : 0;
        d.labels.push_back(y);
        d.scores.push_back(std::min(1.0, std::max(0.0, rng.uniform(0.0, 0.7) + 0.3 * y)));
    }
    const std::string roc = roc_svg(d);
    CHECK(roc.find("<svg") != std::string::npos);
    CHECK(roc.find("</svg>") != std::string::npos);
    CHECK(roc_svg(d) == roc);
    const std::string k = kde_svg(d, 0.123);
    CHECK(k.find("<svg") != std::string::npos);
    CHECK(k.find("0.123") != std::string::npos);  // Brier annotation
    CHECK(kde_svg(d, 0.123) == k);
}
