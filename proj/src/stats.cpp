#include "gonlab/stats.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gonlab {

using nlohmann::json;

void LabeledScores::validate() const {
    if (scores.size() != labels.size() || scores.empty())
        throw ValidationError("scores and labels must be equal-length and non-empty");
    for (double s : scores)
        if (!std::isfinite(s)) throw ValidationError("non-finite score");
    for (int l : labels)
        if (l != 0 && l != 1) throw ValidationError("labels must be 0/1");
}

long LabeledScores::n_positive() const {
    return std::count(labels.begin(), labels.end(), 1);
}

namespace {

// average ranks (1-based) of v, ties shared
std::vector<double> average_ranks(const std::vector<double>& v) {
    const size_t n = v.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// percentile with linear interpolation between order statistics
double percentile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    if (v.size() == 1) return v[0];
    const double h = q / 100.0 * static_cast<double>(v.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(h));
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] + (h - lo) * (v[lo + 1] - v[lo]);
}

// class-stratified subsample of ceil(frac*n) indices, without replacement
std::vector<size_t> stratified_subsample(const std::vector<size_t>& pos_idx,
                                         const std::vector<size_t>& neg_idx, double frac,
                                         Rng& rng) {
    const size_t n = pos_idx.size() + neg_idx.size();
    const size_t m = static_cast<size_t>(std::ceil(frac * static_cast<double>(n)));
    size_t m_pos = static_cast<size_t>(
        std::llround(static_cast<double>(m) * static_cast<double>(pos_idx.size()) / n));
    m_pos = std::clamp<size_t>(m_pos, 1, std::min(m - 1, pos_idx.size()));
    size_t m_neg = std::min(m - m_pos, neg_idx.size());
    if (m_pos < 1 || m_neg < 1)
        throw ValidationError("class too small for stratified subsample");

    auto draw = [&](std::vector<size_t> from, size_t k) {
        // partial Fisher-Yates
        for (size_t i = 0; i < k; ++i) {
            const size_t j = i + static_cast<size_t>(rng.next_below(from.size() - i));
            std::swap(from[i], from[j]);
        }
        from.resize(k);
        return from;
    };
    std::vector<size_t> out = draw(pos_idx, m_pos);
    const auto negs = draw(neg_idx, m_neg);
    out.insert(out.end(), negs.begin(), negs.end());
    return out;
}

void split_by_class(const std::vector<int>& labels, std::vector<size_t>& pos,
                    std::vector<size_t>& neg) {
    for (size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(i);
}

double auc_on(const std::vector<double>& scores, const std::vector<int>& labels) {
    const auto ranks = average_ranks(scores);
    double rank_sum = 0.0;
    long n_pos = 0;
    for (size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == 1) {
            rank_sum += ranks[i];
            ++n_pos;
        }
    const long n_neg = static_cast<long>(labels.size()) - n_pos;
    if (n_pos == 0 || n_neg == 0) throw SingleClass();
    return (rank_sum - static_cast<double>(n_pos) * (n_pos + 1) / 2.0) /
           (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace

double auc(const LabeledScores& data) {
    data.validate();
    return auc_on(data.scores, data.labels);
}

BootstrapCi bootstrap_auc_ci(const LabeledScores& data, int iterations, double subsample_frac,
                             uint64_t seed) {
    data.validate();
    if (data.scores.size() < 20) throw ValidationError("bootstrap requires n >= 20");
    if (iterations < 1) throw ValidationError("iterations must be positive");
    std::vector<size_t> pos, neg;
    split_by_class(data.labels, pos, neg);
    if (pos.empty() || neg.empty()) throw SingleClass();

    BootstrapCi out;
    out.iteration_aucs.reserve(static_cast<size_t>(iterations));
    for (int it = 0; it < iterations; ++it) {
        Rng rng(derive_seed(seed, "bootstrap", static_cast<uint64_t>(it)));
        const auto idx = stratified_subsample(pos, neg, subsample_frac, rng);
        std::vector<double> s;
        std::vector<int> l;
        s.reserve(idx.size());
        l.reserve(idx.size());
        for (size_t i : idx) {
            s.push_back(data.scores[i]);
            l.push_back(data.labels[i]);
        }
        out.iteration_aucs.push_back(auc_on(s, l));
    }
    out.ci_low = percentile(out.iteration_aucs, 2.5);
    out.ci_high = percentile(out.iteration_aucs, 97.5);
    return out;
}

double wilcoxon_signed_rank(const std::vector<double>& differences) {
    std::vector<double> d;
    for (double x : differences) {
        if (!std::isfinite(x)) throw ValidationError("non-finite difference");
        if (x != 0.0) d.push_back(x);
    }
    if (d.empty()) return 1.0;  // no evidence either way
    const size_t n = d.size();

    std::vector<double> abs_d(n);
    for (size_t i = 0; i < n; ++i) abs_d[i] = std::fabs(d[i]);
    const auto ranks = average_ranks(abs_d);

    double w_plus = 0.0, w_minus = 0.0;
    for (size_t i = 0; i < n; ++i) (d[i] > 0 ? w_plus : w_minus) += ranks[i];
    const double w = std::min(w_plus, w_minus);

    if (n <= 25) {
        // Exact: doubled ranks are integers even with average-rank ties, so
        // the null distribution of 2*W+ over all 2^n sign assignments is a
        // subset-sum DP. Counts fit a double exactly (2^25 < 2^53).
        std::vector<long> r2(n);
        long total2 = 0;
        for (size_t i = 0; i < n; ++i) {
            r2[i] = std::lround(ranks[i] * 2.0);
            total2 += r2[i];
        }
        std::vector<double> count(static_cast<size_t>(total2) + 1, 0.0);
        count[0] = 1.0;
        long reach = 0;
        for (size_t i = 0; i < n; ++i) {
            reach += r2[i];
            for (long s = reach; s >= r2[i]; --s)
                count[static_cast<size_t>(s)] += count[static_cast<size_t>(s - r2[i])];
        }
        const double denom = std::pow(2.0, static_cast<double>(n));
        const long w2 = std::lround(w * 2.0);
        double lower = 0.0, upper = 0.0;
        for (long s = 0; s <= total2; ++s) {
            if (s <= w2) lower += count[static_cast<size_t>(s)];
            if (s >= total2 - w2) upper += count[static_cast<size_t>(s)];
        }
        return std::min(1.0, (lower + upper) / denom);
    }

    // normal approximation with tie and continuity corrections
    const double nn = static_cast<double>(n);
    double tie_term = 0.0;
    {
        std::vector<double> sorted(abs_d);
        std::sort(sorted.begin(), sorted.end());
        size_t i = 0;
        while (i < sorted.size()) {
            size_t j = i;
            while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
            const double t = static_cast<double>(j - i + 1);
            tie_term += t * t * t - t;
            i = j + 1;
        }
    }
    const double mean = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    if (var <= 0.0) return 1.0;  // all |d| tied at one value and n tiny
    const double z = (w - mean + 0.5) / std::sqrt(var);
    return std::clamp(2.0 * normal_cdf(z), 0.0, 1.0);
}

ComparisonResult compare_models(const std::vector<double>& scores_a,
                                const std::vector<double>& scores_b,
                                const std::vector<int>& labels, int iterations,
                                double subsample_frac, uint64_t seed) {
    if (scores_a.size() != scores_b.size() || scores_a.size() != labels.size() || labels.empty())
        throw ValidationError("compare_models requires aligned score/label lists");
    LabeledScores a{scores_a, labels};
    LabeledScores b{scores_b, labels};
    a.validate();
    b.validate();
    std::vector<size_t> pos, neg;
    split_by_class(labels, pos, neg);
    if (pos.empty() || neg.empty()) throw SingleClass();

    ComparisonResult out;
    out.auc_differences.reserve(static_cast<size_t>(iterations));
    for (int it = 0; it < iterations; ++it) {
        Rng rng(derive_seed(seed, "compare", static_cast<uint64_t>(it)));
        const auto idx = stratified_subsample(pos, neg, subsample_frac, rng);
        std::vector<double> sa, sb;
        std::vector<int> l;
        for (size_t i : idx) {
            sa.push_back(scores_a[i]);
            sb.push_back(scores_b[i]);
            l.push_back(labels[i]);
        }
        out.auc_differences.push_back(auc_on(sa, l) - auc_on(sb, l));
    }
    out.p_value = wilcoxon_signed_rank(out.auc_differences);
    out.significant_at_0_05 = out.p_value < 0.05;
    return out;
}

double brier(const LabeledScores& data) {
    data.validate();
    for (double s : data.scores)
        if (s < 0.0 || s > 1.0)
            throw ValidationError("brier expects probability scores in [0, 1]");
    double acc = 0.0;
    for (size_t i = 0; i < data.scores.size(); ++i) {
        const double d = data.scores[i] - data.labels[i];
        acc += d * d;
    }
    return acc / static_cast<double>(data.scores.size());
}

DensityCurve kde(const std::vector<double>& values, int grid_points) {
    if (values.size() < 2) throw ValidationError("kde requires n >= 2");
    if (grid_points < 2) throw ValidationError("kde requires >= 2 grid points");
    for (double v : values)
        if (!std::isfinite(v)) throw ValidationError("non-finite kde input");

    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / (n - 1.0));
    const double iqr = percentile(values, 75.0) - percentile(values, 25.0);
    const double spread = std::min(sd, iqr / 1.34);
    double h = 0.9 * spread * std::pow(n, -0.2);
    if (!(h >= 1e-3)) h = 1e-3;

    DensityCurve curve;
    curve.bandwidth = h;
    curve.x.resize(static_cast<size_t>(grid_points));
    curve.density.resize(static_cast<size_t>(grid_points));
    const double inv = 1.0 / (n * h * std::sqrt(2.0 * M_PI));
    for (int g = 0; g < grid_points; ++g) {
        const double x = static_cast<double>(g) / (grid_points - 1);
        curve.x[static_cast<size_t>(g)] = x;
        double dsum = 0.0;
        for (double v : values) {
            // reflection at 0 and 1
            for (double src : {v, -v, 2.0 - v}) {
                const double u = (x - src) / h;
                dsum += std::exp(-0.5 * u * u);
            }
        }
        curve.density[static_cast<size_t>(g)] = dsum * inv;
    }
    return curve;
}

EvalReport evaluate(const LabeledScores& data, const std::string& model_id,
                    const std::string& dataset_id, int iterations, double subsample_frac,
                    uint64_t seed) {
    EvalReport r;
    r.model_id = model_id;
    r.dataset_id = dataset_id;
    r.auc = auc(data);
    const auto ci = bootstrap_auc_ci(data, iterations, subsample_frac, seed);
    r.ci_low = ci.ci_low;
    r.ci_high = ci.ci_high;
    r.brier = brier(data);
    r.n = static_cast<long>(data.scores.size());
    r.n_positive = data.n_positive();
    return r;
}

std::string eval_report_json(const EvalReport& r) {
    json j;
    j["model_id"] = r.model_id;
    j["dataset_id"] = r.dataset_id;
    j["auc"] = r.auc;
    j["ci_low"] = r.ci_low;
    j["ci_high"] = r.ci_high;
    j["brier"] = r.brier;
    j["n"] = r.n;
    j["n_positive"] = r.n_positive;
    return j.dump(2) + "\n";
}

std::string comparison_json(const ComparisonResult& r) {
    json j;
    j["model_a"] = r.model_a;
    j["model_b"] = r.model_b;
    j["p_value"] = r.p_value;
    j["significant_at_0.05"] = r.significant_at_0_05;
    j["n_iterations"] = r.auc_differences.size();
    double mean_diff = 0.0;
    for (double d : r.auc_differences) mean_diff += d;
    if (!r.auc_differences.empty()) mean_diff /= static_cast<double>(r.auc_differences.size());
    j["mean_auc_difference"] = mean_diff;
    return j.dump(2) + "\n";
}

std::string kde_csv(const DensityCurve& c) {
    std::string out = "x,density\n";
    char buf[64];
    for (size_t i = 0; i < c.x.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.9g,%.9g\n", c.x[i], c.density[i]);
        out += buf;
    }
    return out;
}

}  // namespace gonlab
