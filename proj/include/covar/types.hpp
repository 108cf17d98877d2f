// Dense numeric types shared across the library.
#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace covar {

// Batches are stored one sample per row, so row-major keeps a sample
// contiguous in memory (this is also the on-disk layout).
template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatX = Mat<double>;
using VecX = Vec<double>;
using MatF = Mat<float>;
using VecF = Vec<float>;

using Index = Eigen::Index;

} // namespace covar
