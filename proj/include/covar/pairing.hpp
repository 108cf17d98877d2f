// Positive / negative pair construction and train/test splitting.
#pragma once

#include <vector>

#include "covar/rng.hpp"
#include "covar/types.hpp"

namespace covar {

enum class PairLabel { positive, negative };

/// n records of synchronized measurements. Hidden generator values travel
/// with the dataset for evaluation only; training code never reads them
/// (size-0 vectors mean "absent"). hidden_x2 holds the second side's common
/// value for mixed (negative) datasets and is kept in memory only.
struct PairedDataset {
    MatX s1; // n x d1
    MatX s2; // n x d2
    VecX hidden_x;
    VecX hidden_y;
    VecX hidden_z;
    VecX hidden_x2;
    PairLabel label = PairLabel::positive;

    Index n() const { return s1.rows(); }
    bool has_hidden_x() const { return hidden_x.size() == n() && n() > 0; }
};

/// Seeded derangement of {0, ..., n-1}: a uniform permutation is reshuffled
/// until it has no fixed point.
std::vector<Index> derangement(Index n, RngStream& rng);

/// Mixed pairs (s1[i], s2[pi(i)]) with pi a seeded derangement, so row i
/// never keeps its own partner. Hidden values are carried per side:
/// hidden_x keeps side 1's value, hidden_x2 receives side 2's, and hidden_z
/// follows side 2.
PairedDataset make_negatives(const PairedDataset& pos, RngStream& rng);

/// How split_dataset forms the train/test negatives.
///  - remix: negatives are rebuilt by deranging within each side of the
///    positive split. Use when `neg` was mixed from `pos` and shares its
///    measurements, so no test row can leak into training.
///  - row_split: negatives are split by their own rows. Use when `neg` holds
///    independently generated measurements.
enum class NegativeSplitPolicy { remix, row_split };

struct SplitResult {
    PairedDataset train_pos;
    PairedDataset train_neg;
    PairedDataset test_pos;
    PairedDataset test_neg;
};

SplitResult split_dataset(const PairedDataset& pos, const PairedDataset& neg,
                          double test_fraction, RngStream& rng,
                          NegativeSplitPolicy policy = NegativeSplitPolicy::remix);

/// Copies the selected rows (and any hidden values) into a new dataset.
PairedDataset select_rows(const PairedDataset& data, const std::vector<Index>& rows);

} // namespace covar
