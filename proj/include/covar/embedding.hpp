// Spectral dimensionality reduction of learned representations.
#pragma once

#include <optional>
#include <string>

#include "covar/types.hpp"

namespace covar {

enum class EmbeddingMethod { pca, diffusion };

const char* to_string(EmbeddingMethod m);
EmbeddingMethod embedding_method_from_string(const std::string& name);

struct EmbeddingResult {
    MatX coordinates; // n x k
    VecX eigenvalues; // k, sorted non-increasing
    EmbeddingMethod method = EmbeddingMethod::pca;
    double bandwidth = 0.0; // diffusion only
};

/// Principal components: coordinates are the projections of the centered
/// rows onto the top-k eigenvectors of the sample covariance; eigenvalues
/// are the component variances. Eigenvector signs are fixed by making each
/// one's largest-magnitude entry positive.
EmbeddingResult pca(const MatX& points, Index k);

/// Diffusion map at diffusion time 1: W_ij = exp(-|p_i - p_j|^2 / eps) with
/// eps the median pairwise squared distance when no bandwidth is given,
/// P = D^-1 W row-stochastic, eigenpairs computed through the symmetric
/// conjugate D^-1/2 W D^-1/2. The trivial constant eigenvector (eigenvalue 1)
/// is dropped; coordinate l is lambda_l * psi_l for l = 1..k. Signs fixed as
/// in pca. Throws NumericError when all points coincide.
EmbeddingResult diffusion_maps(const MatX& points, Index k,
                               std::optional<double> bandwidth = std::nullopt);

} // namespace covar
