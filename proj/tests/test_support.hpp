// Shared test helpers and independent oracles. Everything here deliberately
// avoids the library's own linear algebra paths: the matmul oracle is a
// triple loop, the network oracle a scalar loop, the eigensolver a plain
// Jacobi sweep.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "covar/mlp.hpp"
#include "covar/rng.hpp"
#include "covar/types.hpp"

namespace covar::test {

inline MatX matmul_oracle(const MatX& a, const MatX& b) {
    MatX c = MatX::Zero(a.rows(), b.cols());
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < b.cols(); ++j) {
            double sum = 0.0;
            for (Index k = 0; k < a.cols(); ++k) sum += a(i, k) * b(k, j);
            c(i, j) = sum;
        }
    }
    return c;
}

// Scalar-loop forward pass over one input row, no Eigen products involved.
inline std::vector<double> forward_oracle(const SubNetwork& net, const std::vector<double>& input) {
    std::vector<double> a = input;
    for (const LayerParams& layer : net.layers) {
        std::vector<double> next(static_cast<std::size_t>(layer.out_dim()), 0.0);
        for (Index o = 0; o < layer.out_dim(); ++o) {
            double z = layer.biases[o];
            for (Index i = 0; i < layer.in_dim(); ++i) {
                z += layer.weights(o, i) * a[static_cast<std::size_t>(i)];
            }
            switch (layer.activation) {
                case Activation::logistic: z = 1.0 / (1.0 + std::exp(-z)); break;
                case Activation::tanh: z = std::tanh(z); break;
                case Activation::linear: break;
            }
            next[static_cast<std::size_t>(o)] = z;
        }
        a = std::move(next);
    }
    return a;
}

// Central finite differences of a scalar function of a parameter vector.
inline VecX finite_difference(const std::function<double(const VecX&)>& f, const VecX& theta,
                              double h = 1e-6) {
    VecX grad(theta.size());
    VecX probe = theta;
    for (Index i = 0; i < theta.size(); ++i) {
        probe[i] = theta[i] + h;
        const double up = f(probe);
        probe[i] = theta[i] - h;
        const double down = f(probe);
        probe[i] = theta[i];
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

inline double gradient_rel_err(const VecX& analytic, const VecX& numeric) {
    const double denom = std::max({analytic.norm(), numeric.norm(), 1e-8});
    return (analytic - numeric).norm() / denom;
}

// Cyclic Jacobi eigensolver for symmetric matrices: returns eigenvalues in
// descending order and the matching eigenvectors as columns.
inline void jacobi_eigen_oracle(MatX a, VecX& eigenvalues, MatX& eigenvectors) {
    const Index n = a.rows();
    MatX v = MatX::Identity(n, n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (Index p = 0; p < n; ++p) {
            for (Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        }
        if (off < 1e-24) break;
        for (Index p = 0; p < n; ++p) {
            for (Index q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Index k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Index k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    std::vector<Index> order(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](Index lhs, Index rhs) {
        if (a(lhs, lhs) != a(rhs, rhs)) return a(lhs, lhs) > a(rhs, rhs);
        return lhs < rhs;
    });
    eigenvalues.resize(n);
    eigenvectors.resize(n, n);
    for (Index j = 0; j < n; ++j) {
        eigenvalues[j] = a(order[static_cast<std::size_t>(j)], order[static_cast<std::size_t>(j)]);
        eigenvectors.col(j) = v.col(order[static_cast<std::size_t>(j)]);
    }
}

// Random small architectures for gradient checks.
inline SubNetwork random_small_net(RngStream& rng, Index input_dim, Index max_layers = 3,
                                   Index max_dim = 10) {
    const auto n_layers = static_cast<Index>(1 + rng.index_below(static_cast<std::uint64_t>(max_layers)));
    std::vector<LayerSpec> specs;
    for (Index l = 0; l < n_layers; ++l) {
        const auto dim = static_cast<Index>(1 + rng.index_below(static_cast<std::uint64_t>(max_dim)));
        const auto kind = rng.index_below(3);
        const Activation act = kind == 0   ? Activation::logistic
                               : kind == 1 ? Activation::tanh
                                           : Activation::linear;
        specs.push_back({dim, act});
    }
    SubNetwork net = init_weights(input_dim, specs, rng);
    for (LayerParams& layer : net.layers) {
        for (Index i = 0; i < layer.biases.size(); ++i) layer.biases[i] = 0.2 * rng.gaussian();
    }
    return net;
}

inline MatX random_matrix(RngStream& rng, Index rows, Index cols, double scale = 1.0) {
    MatX m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) m(r, c) = scale * rng.gaussian();
    }
    return m;
}

} // namespace covar::test
