#include "covar/pairing.hpp"

#include <algorithm>
#include <cmath>

#include "covar/error.hpp"

namespace covar {

namespace {

VecX gather(const VecX& v, const std::vector<Index>& rows) {
    if (v.size() == 0) return v;
    VecX out(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Index>(i)] = v[rows[i]];
    return out;
}

} // namespace

std::vector<Index> derangement(Index n, RngStream& rng) {
    if (n < 2) {
        throw DataError("derangement: need at least 2 elements");
    }
    while (true) {
        std::vector<Index> perm = random_permutation(n, rng);
        bool fixed_point = false;
        for (Index i = 0; i < n; ++i) {
            if (perm[static_cast<std::size_t>(i)] == i) {
                fixed_point = true;
                break;
            }
        }
        if (!fixed_point) return perm;
    }
}

PairedDataset make_negatives(const PairedDataset& pos, RngStream& rng) {
    if (pos.label != PairLabel::positive) {
        throw DataError("make_negatives: input dataset is not positive");
    }
    if (pos.n() < 2) {
        throw DataError("make_negatives: need at least 2 pairs to mix");
    }
    const std::vector<Index> pi = derangement(pos.n(), rng);

    PairedDataset neg;
    neg.label = PairLabel::negative;
    neg.s1 = pos.s1;
    neg.s2 = pos.s2(pi, Eigen::all);
    neg.hidden_x = pos.hidden_x;
    neg.hidden_y = pos.hidden_y;
    neg.hidden_z = gather(pos.hidden_z, pi);
    neg.hidden_x2 = gather(pos.hidden_x, pi);
    return neg;
}

PairedDataset select_rows(const PairedDataset& data, const std::vector<Index>& rows) {
    PairedDataset out;
    out.label = data.label;
    out.s1 = data.s1(rows, Eigen::all);
    out.s2 = data.s2(rows, Eigen::all);
    out.hidden_x = gather(data.hidden_x, rows);
    out.hidden_y = gather(data.hidden_y, rows);
    out.hidden_z = gather(data.hidden_z, rows);
    out.hidden_x2 = gather(data.hidden_x2, rows);
    return out;
}

SplitResult split_dataset(const PairedDataset& pos, const PairedDataset& neg,
                          double test_fraction, RngStream& rng, NegativeSplitPolicy policy) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ConfigError("split_dataset: test_fraction must be in (0, 1)");
    }
    if (pos.label != PairLabel::positive || neg.label != PairLabel::negative) {
        throw DataError("split_dataset: expected a positive and a negative dataset");
    }

    const Index n = pos.n();
    const auto n_test = static_cast<Index>(std::llround(test_fraction * static_cast<double>(n)));
    const Index min_rows = policy == NegativeSplitPolicy::remix ? 2 : 1;
    if (n_test < min_rows || n - n_test < min_rows) {
        throw DataError("split_dataset: split would leave a partition too small (" +
                        std::to_string(n - n_test) + "/" + std::to_string(n_test) + ")");
    }

    const std::vector<Index> perm = random_permutation(n, rng);
    std::vector<Index> test_rows(perm.begin(), perm.begin() + n_test);
    std::vector<Index> train_rows(perm.begin() + n_test, perm.end());

    SplitResult split;
    split.train_pos = select_rows(pos, train_rows);
    split.test_pos = select_rows(pos, test_rows);

    if (policy == NegativeSplitPolicy::remix) {
        // Rebuild negatives inside each partition: a mixed negative row built
        // across the split boundary would expose test measurements to
        // training.
        RngStream train_rng = rng.split(1);
        RngStream test_rng = rng.split(2);
        split.train_neg = make_negatives(split.train_pos, train_rng);
        split.test_neg = make_negatives(split.test_pos, test_rng);
    } else {
        const Index m = neg.n();
        const auto m_test =
            static_cast<Index>(std::llround(test_fraction * static_cast<double>(m)));
        if (m_test < 1 || m - m_test < 1) {
            throw DataError("split_dataset: negative split would leave an empty partition");
        }
        const std::vector<Index> nperm = random_permutation(m, rng);
        std::vector<Index> neg_test(nperm.begin(), nperm.begin() + m_test);
        std::vector<Index> neg_train(nperm.begin() + m_test, nperm.end());
        split.train_neg = select_rows(neg, neg_train);
        split.test_neg = select_rows(neg, neg_test);
    }
    return split;
}

} // namespace covar
