#include "covar/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "covar/error.hpp"

namespace covar {

EvalReport pair_accuracy(const JointNetwork& jn, const PairedDataset& test_pos,
                         const PairedDataset& test_neg) {
    if (test_pos.n() < 1 || test_neg.n() < 1) {
        throw DataError("pair_accuracy: empty test set");
    }
    const PairPrediction pos_pred = predict_pair(jn, test_pos.s1, test_pos.s2);
    const PairPrediction neg_pred = predict_pair(jn, test_neg.s1, test_neg.s2);

    Index correct = 0;
    for (bool p : pos_pred.is_positive) correct += p ? 1 : 0;
    for (bool p : neg_pred.is_positive) correct += p ? 0 : 1;

    EvalReport report;
    report.n_test_pos = test_pos.n();
    report.n_test_neg = test_neg.n();
    report.accuracy =
        static_cast<double>(correct) / static_cast<double>(test_pos.n() + test_neg.n());
    report.mean_pos_score = pos_pred.score.mean();
    report.mean_neg_score = neg_pred.score.mean();
    return report;
}

namespace {

double median_of(std::vector<double> values) {
    const std::size_t n = values.size();
    auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    double hi = *mid;
    if (n % 2 == 1) return hi;
    double lo = *std::max_element(values.begin(), mid);
    return 0.5 * (lo + hi);
}

} // namespace

double separation_auc(const std::vector<double>& d_same, const std::vector<double>& d_diff) {
    if (d_same.empty() || d_diff.empty()) throw DataError("separation_auc: empty inputs");
    std::vector<double> sorted_diff = d_diff;
    std::sort(sorted_diff.begin(), sorted_diff.end());
    double total = 0.0;
    for (double s : d_same) {
        const auto lower = std::lower_bound(sorted_diff.begin(), sorted_diff.end(), s);
        const auto upper = std::upper_bound(lower, sorted_diff.end(), s);
        const auto greater = static_cast<double>(sorted_diff.end() - upper);
        const auto ties = static_cast<double>(upper - lower);
        total += greater + 0.5 * ties;
    }
    return total / (static_cast<double>(d_same.size()) * static_cast<double>(d_diff.size()));
}

InvarianceSummary invariance_histograms(const SubNetwork& f1, const std::vector<ImageGray>& corpus,
                                        Index trials, RngStream& rng,
                                        const Standardizer* input_standardizer) {
    if (trials < 1) throw ConfigError("invariance_histograms: trials must be >= 1");
    if (corpus.size() < 2) throw DataError("invariance_histograms: corpus needs >= 2 images");

    constexpr double kTwoPi = 2.0 * std::numbers::pi;
    const auto n_images = static_cast<std::uint64_t>(corpus.size());

    auto embed = [&](const ImageGray& img, double angle) -> VecX {
        MatX row = flatten_image(rotate_image(img, angle));
        if (input_standardizer != nullptr) input_standardizer->apply_in_place(row);
        return forward(f1, row).output().row(0).transpose();
    };

    std::vector<double> d_same, d_diff;
    d_same.reserve(static_cast<std::size_t>(trials));
    d_diff.reserve(static_cast<std::size_t>(trials));
    for (Index t = 0; t < trials; ++t) {
        RngStream trial = rng.split(static_cast<std::uint64_t>(t));
        const auto i = trial.index_below(n_images);
        auto j = trial.index_below(n_images - 1);
        if (j >= i) ++j;
        const VecX fa = embed(corpus[i], trial.uniform(0.0, kTwoPi));
        const VecX fa_prime = embed(corpus[i], trial.uniform(0.0, kTwoPi));
        const VecX fb = embed(corpus[j], trial.uniform(0.0, kTwoPi));
        d_same.push_back((fa - fa_prime).norm());
        d_diff.push_back((fa - fb).norm());
    }

    InvarianceSummary summary;
    summary.trials = trials;
    summary.median_same = median_of(d_same);
    summary.median_diff = median_of(d_diff);
    summary.separation_auc = separation_auc(d_same, d_diff);
    return summary;
}

namespace {

// Fisher-Lee circular correlation coefficient.
double circular_corr_coeff(const VecX& a, const VecX& b, bool& degenerate) {
    const double a_bar = std::atan2(a.array().sin().sum(), a.array().cos().sum());
    const double b_bar = std::atan2(b.array().sin().sum(), b.array().cos().sum());
    const Eigen::ArrayXd sa = (a.array() - a_bar).sin();
    const Eigen::ArrayXd sb = (b.array() - b_bar).sin();
    const double denom_a = sa.square().sum();
    const double denom_b = sb.square().sum();
    if (denom_a <= 0.0 || denom_b <= 0.0) {
        degenerate = true;
        return 0.0;
    }
    degenerate = false;
    return (sa * sb).sum() / std::sqrt(denom_a * denom_b);
}

} // namespace

double circular_correlation(const VecX& recovered_angle, const VecX& true_angle) {
    if (recovered_angle.size() != true_angle.size() || recovered_angle.size() < 3) {
        throw DataError("circular_correlation: need two equal-length sequences of >= 3 angles");
    }
    constexpr int kOffsets = 360;
    constexpr double kTwoPi = 2.0 * std::numbers::pi;

    double best = 0.0;
    bool any_valid = false;
    for (int reflect = 0; reflect < 2; ++reflect) {
        const double sign = reflect == 0 ? 1.0 : -1.0;
        for (int g = 0; g < kOffsets; ++g) {
            const double phi = kTwoPi * static_cast<double>(g) / kOffsets;
            const VecX aligned = (sign * true_angle.array() + phi).matrix();
            bool degenerate = false;
            const double rho = circular_corr_coeff(recovered_angle, aligned, degenerate);
            if (degenerate) continue;
            any_valid = true;
            best = std::max(best, rho);
        }
    }
    if (!any_valid) {
        throw NumericError("circular_correlation: zero circular variance in the inputs");
    }
    return best;
}

} // namespace covar
