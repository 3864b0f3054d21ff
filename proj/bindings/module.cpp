#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gonlab/biometrics.hpp"
#include "gonlab/imaging.hpp"
#include "gonlab/pipeline.hpp"
#include "gonlab/stats.hpp"
#include "gonlab/synth.hpp"

namespace py = pybind11;
using namespace gonlab;

namespace {

RgbImage image_from_array(const py::array_t<uint8_t>& arr) {
    if (arr.ndim() != 3 || arr.shape(2) != 3)
        throw ValidationError("expected an HxWx3 uint8 array");
    RgbImage img(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)));
    auto a = arr.unchecked<3>();
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = a(y, x, c);
    return img;
}

py::array_t<uint8_t> image_to_array(const RgbImage& img) {
    py::array_t<uint8_t> arr({img.height, img.width, 3});
    auto a = arr.mutable_unchecked<3>();
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) a(y, x, c) = img.at(x, y, c);
    return arr;
}

SegmentationMask mask_from_array(const py::array_t<uint8_t>& arr) {
    if (arr.ndim() != 2) throw ValidationError("expected an HxW uint8 array");
    SegmentationMask mask(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)));
    auto a = arr.unchecked<2>();
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            if (a(y, x) > 2) throw ValidationError("mask values must be in {0,1,2}");
            mask.at(x, y) = a(y, x);
        }
    return mask;
}

LabeledScores labeled(const std::vector<double>& scores, const std::vector<int>& labels) {
    return LabeledScores{scores, labels};
}

}  // namespace

PYBIND11_MODULE(_gonlab, m) {
    m.doc() = "fundus screening pipeline core: preprocessing, disc biometrics, "
              "evaluation statistics and the synthetic benchmark";

    // imaging
    m.def("pad_to_square",
          [](const py::array_t<uint8_t>& a) { return image_to_array(pad_to_square(image_from_array(a))); });
    m.def(
        "resize_bilinear",
        [](const py::array_t<uint8_t>& a, int side) {
            return image_to_array(resize_bilinear(image_from_array(a), side));
        },
        py::arg("image"), py::arg("side") = kModelInputSide);
    m.def("normalize", [](const py::array_t<uint8_t>& a) {
        const auto img = normalize(image_from_array(a));
        py::array_t<float> arr({kModelInputSide, kModelInputSide, 3});
        std::copy(img.data.begin(), img.data.end(), arr.mutable_data());
        return arr;
    });
    m.def("preprocess", [](const py::array_t<uint8_t>& a) {
        const auto img = preprocess(image_from_array(a));
        py::array_t<float> arr({kModelInputSide, kModelInputSide, 3});
        std::copy(img.data.begin(), img.data.end(), arr.mutable_data());
        return arr;
    });

    // biometrics
    m.def("vertical_cdr", [](const py::array_t<uint8_t>& a) { return vertical_cdr(mask_from_array(a)); });
    m.def("rdr", [](const py::array_t<uint8_t>& a) { return rdr(mask_from_array(a)); });
    m.def("cdr_mae", &cdr_mae, py::arg("predicted"), py::arg("reference"));

    // statistics
    m.def("auc", [](const std::vector<double>& s, const std::vector<int>& l) {
        return auc(labeled(s, l));
    });
    m.def(
        "bootstrap_auc_ci",
        [](const std::vector<double>& s, const std::vector<int>& l, int iterations, double frac,
           uint64_t seed) {
            const auto ci = bootstrap_auc_ci(labeled(s, l), iterations, frac, seed);
            return py::make_tuple(ci.ci_low, ci.ci_high, ci.iteration_aucs);
        },
        py::arg("scores"), py::arg("labels"), py::arg("iterations") = 1000,
        py::arg("subsample_frac") = 0.95, py::arg("seed") = 0);
    m.def("wilcoxon_signed_rank", &wilcoxon_signed_rank, py::arg("differences"));
    m.def("brier", [](const std::vector<double>& s, const std::vector<int>& l) {
        return brier(labeled(s, l));
    });
    m.def(
        "kde",
        [](const std::vector<double>& values, int grid_points) {
            const auto c = kde(values, grid_points);
            return py::make_tuple(c.x, c.density, c.bandwidth);
        },
        py::arg("values"), py::arg("grid_points") = 512);
    m.def(
        "compare_models",
        [](const std::vector<double>& a, const std::vector<double>& b,
           const std::vector<int>& labels, int iterations, uint64_t seed) {
            const auto r = compare_models(a, b, labels, iterations, 0.95, seed);
            return py::make_tuple(r.p_value, r.significant_at_0_05);
        },
        py::arg("scores_a"), py::arg("scores_b"), py::arg("labels"),
        py::arg("iterations") = 1000, py::arg("seed") = 0);

    // synthetic benchmark
    py::class_<DomainSpec>(m, "DomainSpec")
        .def(py::init<>())
        .def_readwrite("domain_id", &DomainSpec::domain_id)
        .def_readwrite("n_images", &DomainSpec::n_images)
        .def_readwrite("prevalence", &DomainSpec::prevalence)
        .def_readwrite("cdr_mean_neg", &DomainSpec::cdr_mean_neg)
        .def_readwrite("cdr_mean_pos", &DomainSpec::cdr_mean_pos)
        .def_readwrite("cdr_sd", &DomainSpec::cdr_sd)
        .def_readwrite("resolution", &DomainSpec::resolution);
    m.def(
        "generate_domain_to_dir",
        [](const DomainSpec& spec, uint64_t seed, const std::string& dir) {
            write_corpus(generate_domain(spec, seed), dir);
        },
        py::arg("spec"), py::arg("seed"), py::arg("dir"));

    // pipeline stages, driven by a config JSON string
    m.def("run_pipeline_stage", [](const std::string& config_json, const std::string& stage,
                                   const std::string& domain) {
        auto cfg = PipelineConfig::from_json_text(config_json);
        if (stage == "synth")
            cmd_synth(cfg);
        else if (stage == "gate")
            cmd_gate(cfg);
        else if (stage == "split")
            cmd_split(cfg);
        else if (stage == "train_ssd")
            cmd_train(cfg, TrainMode::Ssd, domain);
        else if (stage == "train_msd")
            cmd_train(cfg, TrainMode::Msd, domain);
        else if (stage == "eval")
            cmd_eval(cfg, domain);
        else if (stage == "report")
            cmd_report(cfg);
        else
            throw ValidationError("unknown stage: " + stage);
    }, py::arg("config_json"), py::arg("stage"), py::arg("domain") = "");
}
