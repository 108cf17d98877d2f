// Greedy layer-wise initialization of hidden layers as denoising
// autoencoders with a KL activation-sparsity penalty.
#pragma once

#include <cstdint>
#include <utility>

#include "covar/mlp.hpp"
#include "covar/rng.hpp"
#include "covar/types.hpp"

namespace covar {

struct DaeConfig {
    double corruption_probability = 0.3; // in [0, 1)
    double sparsity_target = 0.1;        // rho, in (0, 1)
    double sparsity_weight = 0.1;        // >= 0
    Index epochs = 10;
    double learning_rate = 0.01; // > 0
    Index batch_size = 256;      // rows per plain-SGD step
    std::uint64_t seed = 0;
};

/// Masking noise: each entry is zeroed independently with probability p.
MatX corrupt(const MatX& input, double p, RngStream& rng);

/// KL divergence between Bernoulli(rho) and Bernoulli(rho_hat).
double kl_bernoulli(double rho, double rho_hat);

struct DaeGrads {
    LayerGrads encoder;
    LayerGrads decoder;
};

/// Loss and exact gradients of a one-hidden-layer denoising autoencoder:
/// hidden = logistic(corrupted W_e^T + b_e), reconstruction = hidden W_d^T + b_d,
/// loss = mean over rows of the squared reconstruction error against `clean`
/// plus sparsity_weight * sum_j KL(rho || rho_hat_j), where rho_hat_j is the
/// batch-mean activation of hidden unit j (clamped to [1e-8, 1 - 1e-8]).
/// The hidden activation is always logistic here, whatever the encoder layer
/// declares, so rho_hat is a rate in (0, 1).
std::pair<double, DaeGrads> dae_loss_grad(const LayerParams& encoder, const LayerParams& decoder,
                                          const MatX& clean, const MatX& corrupted,
                                          const DaeConfig& cfg);

/// Greedy stack pretraining: trains hidden layer 1 as a DAE on `data`,
/// freezes it, feeds its clean logistic activations to layer 2, and so on.
/// The output layer is left untouched; each hidden layer keeps its declared
/// activation, only the trained weights and biases are written back.
SubNetwork pretrain_stack(SubNetwork net, const MatX& data, const DaeConfig& cfg);

} // namespace covar
