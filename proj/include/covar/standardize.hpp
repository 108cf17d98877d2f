// Per-feature standardization, fit on training data and stored with the
// model so every later forward pass sees the same transform.
#pragma once

#include "covar/types.hpp"

namespace covar {

struct Standardizer {
    VecX mean;
    VecX stddev; // constant features get stddev 1 so they map to 0

    static Standardizer fit(const MatX& data);

    MatX apply(const MatX& data) const;
    void apply_in_place(MatX& data) const;

    Index dim() const { return mean.size(); }
};

} // namespace covar
