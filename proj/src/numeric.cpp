#include "covar/numeric.hpp"

namespace covar {

MatX matmul(const MatX& a, const MatX& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul", a.rows(), a.cols(), b.rows(), b.cols());
    }
    return a * b;
}

bool all_finite(const MatX& m) { return m.allFinite(); }

void require_finite(const MatX& m, const char* what) {
    if (!m.allFinite()) {
        throw NumericError(std::string(what) + ": non-finite values encountered");
    }
}

} // namespace covar
