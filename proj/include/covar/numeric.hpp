// Scalar nonlinearities and checked dense products.
#pragma once

#include <cmath>

#include "covar/error.hpp"
#include "covar/types.hpp"

namespace covar {

/// Logistic sigmoid 1 / (1 + exp(-x)), evaluated on the numerically stable
/// branch so logistic(x) + logistic(-x) == 1 to machine precision.
inline double logistic(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// Elementwise logistic as an Eigen expression.
template <class Derived>
auto logistic(const Eigen::MatrixBase<Derived>& m) {
    return m.unaryExpr([](double v) { return logistic(v); });
}

/// Checked matrix product. Throws ShapeError when inner dimensions disagree.
MatX matmul(const MatX& a, const MatX& b);

bool all_finite(const MatX& m);

/// Throws NumericError naming `what` if any entry is NaN or infinite.
void require_finite(const MatX& m, const char* what);

} // namespace covar
