#include "covar/standardize.hpp"

#include <cmath>

#include "covar/error.hpp"

namespace covar {

Standardizer fit_impl(const MatX& data) {
    if (data.rows() < 1) throw DataError("Standardizer::fit: empty data");
    Standardizer s;
    s.mean = data.colwise().mean().transpose();
    const auto n = static_cast<double>(data.rows());
    VecX var = (data.rowwise() - s.mean.transpose()).colwise().squaredNorm().transpose() / n;
    s.stddev = var.array().sqrt().matrix();
    for (Index j = 0; j < s.stddev.size(); ++j) {
        if (s.stddev[j] < 1e-12) s.stddev[j] = 1.0;
    }
    return s;
}

Standardizer Standardizer::fit(const MatX& data) { return fit_impl(data); }

MatX Standardizer::apply(const MatX& data) const {
    MatX out = data;
    apply_in_place(out);
    return out;
}

void Standardizer::apply_in_place(MatX& data) const {
    if (data.cols() != dim()) {
        throw ShapeError("Standardizer::apply: data vs fitted dim", data.rows(), data.cols(),
                         dim(), 1);
    }
    data.rowwise() -= mean.transpose();
    data.array().rowwise() /= stddev.transpose().array();
}

} // namespace covar
