#include "covar/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "covar/error.hpp"

namespace covar {

const char* to_string(EmbeddingMethod m) {
    return m == EmbeddingMethod::pca ? "pca" : "diffusion";
}

EmbeddingMethod embedding_method_from_string(const std::string& name) {
    if (name == "pca") return EmbeddingMethod::pca;
    if (name == "diffusion") return EmbeddingMethod::diffusion;
    throw ConfigError("unknown embedding method '" + name + "'");
}

namespace {

// Deterministic sign convention: the entry of largest magnitude is positive.
// Takes const& so it can bind to writable block temporaries (Eigen's
// documented pattern for in-place functions).
template <class Derived>
void fix_sign(const Eigen::MatrixBase<Derived>& v_expr) {
    auto& v = const_cast<Eigen::MatrixBase<Derived>&>(v_expr);
    Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0.0) v = -v;
}

} // namespace

EmbeddingResult pca(const MatX& points, Index k) {
    const Index n = points.rows();
    const Index dim = points.cols();
    if (n < 2) throw DataError("pca: need at least 2 points");
    if (k < 1 || k > std::min(n, dim)) {
        throw ConfigError("pca: k must be in [1, min(n, dim)]");
    }

    MatX centered = points;
    centered.rowwise() -= points.colwise().mean();
    const MatX cov = (centered.transpose() * centered) / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<MatX> solver(cov);
    if (solver.info() != Eigen::Success) {
        throw NumericError("pca: eigendecomposition failed");
    }
    // Eigen returns ascending order; take the top k in descending order.
    EmbeddingResult result;
    result.method = EmbeddingMethod::pca;
    result.eigenvalues.resize(k);
    MatX basis(dim, k);
    for (Index j = 0; j < k; ++j) {
        result.eigenvalues[j] = solver.eigenvalues()[dim - 1 - j];
        basis.col(j) = solver.eigenvectors().col(dim - 1 - j);
        fix_sign(basis.col(j));
    }
    result.coordinates = centered * basis;
    return result;
}

EmbeddingResult diffusion_maps(const MatX& points, Index k, std::optional<double> bandwidth) {
    const Index n = points.rows();
    if (n < 3) throw DataError("diffusion_maps: need at least 3 points");
    if (k < 1 || k > n - 1) throw ConfigError("diffusion_maps: k must be in [1, n-1]");

    // Pairwise squared distances.
    const VecX sq_norms = points.rowwise().squaredNorm();
    MatX dist_sq = (-2.0 * points * points.transpose());
    dist_sq.colwise() += sq_norms;
    dist_sq.rowwise() += sq_norms.transpose();
    dist_sq = dist_sq.cwiseMax(0.0);

    double eps = 0.0;
    if (bandwidth.has_value()) {
        if (!(*bandwidth > 0.0)) throw ConfigError("diffusion_maps: bandwidth must be positive");
        eps = *bandwidth;
    } else {
        std::vector<double> offdiag;
        offdiag.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2);
        for (Index i = 0; i < n; ++i) {
            for (Index j = i + 1; j < n; ++j) offdiag.push_back(dist_sq(i, j));
        }
        auto mid = offdiag.begin() + static_cast<std::ptrdiff_t>(offdiag.size() / 2);
        std::nth_element(offdiag.begin(), mid, offdiag.end());
        eps = *mid;
        if (!(eps > 0.0)) {
            throw NumericError("diffusion_maps: points are all identical, bandwidth undefined");
        }
    }

    const MatX kernel = (-dist_sq / eps).array().exp().matrix();
    const VecX degree = kernel.rowwise().sum();
    const VecX inv_sqrt_deg = degree.array().rsqrt();

    // Symmetric conjugate of the transition operator D^-1 W; it shares the
    // eigenvalues, and its eigenvectors map back via psi = D^-1/2 u.
    MatX sym = kernel;
    sym.array().colwise() *= inv_sqrt_deg.array();
    sym.array().rowwise() *= inv_sqrt_deg.transpose().array();
    sym = ((sym + sym.transpose()) * 0.5).eval();

    Eigen::SelfAdjointEigenSolver<MatX> solver(sym);
    if (solver.info() != Eigen::Success) {
        throw NumericError("diffusion_maps: eigendecomposition failed");
    }

    EmbeddingResult result;
    result.method = EmbeddingMethod::diffusion;
    result.bandwidth = eps;
    result.eigenvalues.resize(k);
    result.coordinates.resize(n, k);
    // Ascending order: index n-1 is the trivial eigenvalue 1; skip it.
    for (Index l = 1; l <= k; ++l) {
        const Index col = n - 1 - l;
        const double lambda = solver.eigenvalues()[col];
        VecX psi = inv_sqrt_deg.asDiagonal() * solver.eigenvectors().col(col);
        fix_sign(psi);
        result.eigenvalues[l - 1] = lambda;
        result.coordinates.col(l - 1) = lambda * psi;
    }
    return result;
}

} // namespace covar
