#pragma once

#include <string>
#include <vector>

#include "gonlab/common.hpp"

namespace gonlab {

class SingleClass : public ValidationError {
public:
    SingleClass() : ValidationError("input contains only one class") {}
};

struct LabeledScores {
    std::vector<double> scores;
    std::vector<int> labels;  // 0/1

    void validate() const;
    long n_positive() const;
};

// Mann-Whitney AUC via rank sums; ties count half. O(n log n).
double auc(const LabeledScores& data);

struct BootstrapCi {
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::vector<double> iteration_aucs;
};

// Repeated class-stratified subsampling of ceil(frac*n) records without
// replacement; CI endpoints are the 2.5/97.5 percentiles of the
// iteration AUCs. Per-iteration sub-seeds keep the result independent of
// scheduling.
BootstrapCi bootstrap_auc_ci(const LabeledScores& data, int iterations = 1000,
                             double subsample_frac = 0.95, uint64_t seed = 0);

// Two-sided signed-rank p. Exact distribution (rank-sum DP over all sign
// assignments, average ranks for ties) for n <= 25 after dropping zero
// differences; normal approximation with tie and continuity corrections
// beyond that. All-zero differences give p = 1.
double wilcoxon_signed_rank(const std::vector<double>& differences);

struct ComparisonResult {
    std::string model_a;
    std::string model_b;
    std::vector<double> auc_differences;  // per bootstrap iteration, a - b
    double p_value = 1.0;
    bool significant_at_0_05 = false;
};

// Paired bootstrap: each iteration subsamples the SAME indices for both
// models, then Wilcoxon on the per-iteration AUC differences.
ComparisonResult compare_models(const std::vector<double>& scores_a,
                                const std::vector<double>& scores_b,
                                const std::vector<int>& labels, int iterations = 1000,
                                double subsample_frac = 0.95, uint64_t seed = 0);

double brier(const LabeledScores& data);

struct DensityCurve {
    std::vector<double> x;
    std::vector<double> density;
    double bandwidth = 0.0;
};

// Gaussian KDE on a uniform grid over [0,1]; Silverman bandwidth
// 0.9*min(sd, IQR/1.34)*n^(-1/5) with a 1e-3 floor (zero-variance input
// degenerates to a spike at the value); reflection at both boundaries.
DensityCurve kde(const std::vector<double>& values, int grid_points = 512);

struct EvalReport {
    double auc = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double brier = 0.0;
    long n = 0;
    long n_positive = 0;
    std::string model_id;
    std::string dataset_id;
};

EvalReport evaluate(const LabeledScores& data, const std::string& model_id,
                    const std::string& dataset_id, int iterations = 1000,
                    double subsample_frac = 0.95, uint64_t seed = 0);

std::string eval_report_json(const EvalReport& r);
std::string comparison_json(const ComparisonResult& r);
std::string kde_csv(const DensityCurve& c);

}  // namespace gonlab
