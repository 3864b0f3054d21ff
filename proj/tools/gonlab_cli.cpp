#include <CLI11.hpp>

#include <cstdio>
#include <optional>

#include "gonlab/pipeline.hpp"

namespace {

// exit codes: 0 success, 2 validation error, 1 runtime error
int run(int argc, char** argv) {
    CLI::App app{"fundus screening pipeline: synthetic benchmark, gating, labeling, "
                 "domain-generalization training and statistical evaluation"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<uint64_t> seed_override;
    std::optional<std::string> out_override;
    app.add_option("--config", config_path, "pipeline config JSON")->required();
    app.add_option("--seed", seed_override, "override the config seed");
    app.add_option("--out", out_override, "override the output directory");

    auto* synth = app.add_subcommand("synth", "generate the synthetic multi-domain corpus");
    auto* gate = app.add_subcommand("gate", "quality and optic-disc gating");
    auto* split = app.add_subcommand("split", "labeling, exclusions, flow report and splits");

    auto* train = app.add_subcommand("train", "train a scorer");
    std::string mode = "msd";
    std::string train_domain;
    train->add_option("--mode", mode, "ssd | msd")->check(CLI::IsMember({"ssd", "msd"}));
    train->add_option("--target", train_domain,
                      "msd: left-out target domain; ssd: the source domain")
        ->required();

    auto* eval = app.add_subcommand("eval", "evaluate all trained models plus baselines");
    std::string eval_domain;
    eval->add_option("--target", eval_domain, "target domain")->required();

    auto* compare = app.add_subcommand("compare", "paired bootstrap comparison of two models");
    std::string model_a, model_b, compare_domain;
    compare->add_option("--model-a", model_a)->required();
    compare->add_option("--model-b", model_b)->required();
    compare->add_option("--target", compare_domain)->required();

    auto* report = app.add_subcommand("report", "emit the results matrix and flow report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    auto cfg = gonlab::PipelineConfig::from_file(config_path);
    if (seed_override) cfg.seed = *seed_override;
    if (out_override) cfg.out_dir = *out_override;
    cfg.train.seed = gonlab::derive_seed(cfg.seed, "train");

    if (synth->parsed()) gonlab::cmd_synth(cfg);
    if (gate->parsed()) gonlab::cmd_gate(cfg);
    if (split->parsed()) gonlab::cmd_split(cfg);
    if (train->parsed())
        gonlab::cmd_train(cfg, mode == "ssd" ? gonlab::TrainMode::Ssd : gonlab::TrainMode::Msd,
                          train_domain);
    if (eval->parsed()) gonlab::cmd_eval(cfg, eval_domain);
    if (compare->parsed()) gonlab::cmd_compare(cfg, model_a, model_b, compare_domain);
    if (report->parsed()) gonlab::cmd_report(cfg);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const gonlab::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "runtime error: %s\n", e.what());
        return 1;
    }
}
