// Quantitative evaluation: pair classification accuracy at the fixed 0.75
// threshold, rotation-invariance statistics, and angle-recovery scores.
#pragma once

#include <optional>
#include <vector>

#include "covar/pairing.hpp"
#include "covar/siamese.hpp"
#include "covar/standardize.hpp"
#include "covar/synthdata.hpp"
#include "covar/types.hpp"

namespace covar {

struct InvarianceSummary {
    double median_same = 0.0;      // median |f1(a) - f1(a')| over same-image trials
    double median_diff = 0.0;      // median |f1(a) - f1(b)| over different-image trials
    double separation_auc = 0.5;   // P(d_same < d_diff) over all cross pairs, ties at 1/2
    Index trials = 0;
};

struct Recovery {
    double circular_correlation = 0.0;
};

struct EvalReport {
    double accuracy = 0.0;
    Index n_test_pos = 0;
    Index n_test_neg = 0;
    double mean_pos_score = 0.0;
    double mean_neg_score = 0.0;
    std::optional<InvarianceSummary> invariance;
    std::optional<Recovery> recovery;
};

/// Scores every pair of both test sets; a positive pair is correct when its
/// score is strictly below 0.75, a negative pair when it is at or above.
EvalReport pair_accuracy(const JointNetwork& jn, const PairedDataset& test_pos,
                         const PairedDataset& test_neg);

/// Each trial rotates one random corpus image twice (distance d_same) and a
/// different image once (distance d_diff), measured through f1. When given,
/// the standardizer is applied to the flattened images first, matching how
/// the network was trained.
InvarianceSummary invariance_histograms(const SubNetwork& f1, const std::vector<ImageGray>& corpus,
                                        Index trials, RngStream& rng,
                                        const Standardizer* input_standardizer = nullptr);

/// Circular correlation between two angle sequences, maximized over
/// reflection and over a 360-point grid of global offsets, so the score is
/// invariant to how the recovered parametrization is aligned. Returns a
/// value in [0, 1]. Throws NumericError when either sequence has zero
/// circular variance.
double circular_correlation(const VecX& recovered_angle, const VecX& true_angle);

/// Fraction of (same, diff) cross pairs with same < diff, ties counted 1/2.
double separation_auc(const std::vector<double>& d_same, const std::vector<double>& d_diff);

} // namespace covar
