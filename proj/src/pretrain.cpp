#include "covar/pretrain.hpp"

#include <algorithm>
#include <cmath>

#include "covar/numeric.hpp"

namespace covar {

MatX corrupt(const MatX& input, double p, RngStream& rng) {
    if (!(p >= 0.0 && p < 1.0)) {
        throw ConfigError("corrupt: probability must be in [0, 1)");
    }
    MatX out = input;
    if (p == 0.0) return out;
    for (Index r = 0; r < out.rows(); ++r) {
        for (Index c = 0; c < out.cols(); ++c) {
            if (rng.uniform01() < p) out(r, c) = 0.0;
        }
    }
    return out;
}

double kl_bernoulli(double rho, double rho_hat) {
    return rho * std::log(rho / rho_hat) + (1.0 - rho) * std::log((1.0 - rho) / (1.0 - rho_hat));
}

std::pair<double, DaeGrads> dae_loss_grad(const LayerParams& encoder, const LayerParams& decoder,
                                          const MatX& clean, const MatX& corrupted,
                                          const DaeConfig& cfg) {
    if (clean.rows() != corrupted.rows() || clean.cols() != corrupted.cols()) {
        throw ShapeError("dae_loss_grad: clean vs corrupted", clean.rows(), clean.cols(),
                         corrupted.rows(), corrupted.cols());
    }
    if (corrupted.cols() != encoder.in_dim() || decoder.in_dim() != encoder.out_dim() ||
        decoder.out_dim() != encoder.in_dim()) {
        throw DataError("dae_loss_grad: encoder/decoder dims do not chain input -> hidden -> input");
    }
    const auto n = static_cast<double>(clean.rows());
    const double rho = cfg.sparsity_target;

    MatX z = corrupted * encoder.weights.transpose();
    z.rowwise() += encoder.biases.transpose();
    const MatX hidden = logistic(z);

    MatX recon = hidden * decoder.weights.transpose();
    recon.rowwise() += decoder.biases.transpose();

    const MatX err = recon - clean;
    double loss = err.squaredNorm() / n;

    // Batch-mean activation per hidden unit, clamped away from {0, 1} so the
    // KL term stays finite when a unit saturates.
    VecX rho_hat = hidden.colwise().mean().transpose();
    rho_hat = rho_hat.array().max(1e-8).min(1.0 - 1e-8).matrix();
    VecX d_rho_hat(rho_hat.size());
    for (Index j = 0; j < rho_hat.size(); ++j) {
        loss += cfg.sparsity_weight * kl_bernoulli(rho, rho_hat[j]);
        d_rho_hat[j] = cfg.sparsity_weight * (-rho / rho_hat[j] + (1.0 - rho) / (1.0 - rho_hat[j]));
    }

    DaeGrads grads;
    const MatX d_recon = (2.0 / n) * err;
    grads.decoder.weights = d_recon.transpose() * hidden;
    grads.decoder.biases = d_recon.colwise().sum().transpose();

    MatX d_hidden = d_recon * decoder.weights;
    d_hidden.array().rowwise() += (d_rho_hat.array() / n).transpose();
    const MatX d_z = (d_hidden.array() * hidden.array() * (1.0 - hidden.array())).matrix();
    grads.encoder.weights = d_z.transpose() * corrupted;
    grads.encoder.biases = d_z.colwise().sum().transpose();

    return {loss, std::move(grads)};
}

SubNetwork pretrain_stack(SubNetwork net, const MatX& data, const DaeConfig& cfg) {
    if (net.hidden_layer_count() < 1) {
        throw ConfigError("pretrain_stack: network has no hidden layer");
    }
    if (data.cols() != net.input_dim()) {
        throw ShapeError("pretrain_stack: data vs network input_dim", data.rows(), data.cols(),
                         net.input_dim(), 1);
    }

    RngStream root(cfg.seed);
    MatX layer_data = data;
    const auto n_hidden = static_cast<std::size_t>(net.hidden_layer_count());

    for (std::size_t l = 0; l < n_hidden; ++l) {
        RngStream rng = root.split(static_cast<std::uint64_t>(l));
        LayerParams encoder = net.layers[l];
        // Fresh untied decoder, discarded once the layer is trained.
        std::vector<LayerSpec> dec_spec{{encoder.in_dim(), Activation::linear}};
        LayerParams decoder =
            init_weights(encoder.out_dim(), dec_spec, rng).layers.front();

        const Index n = layer_data.rows();
        const Index batch = std::min<Index>(std::max<Index>(cfg.batch_size, 1), n);
        for (Index epoch = 0; epoch < cfg.epochs; ++epoch) {
            const std::vector<Index> order = random_permutation(n, rng);
            for (Index start = 0; start < n; start += batch) {
                const Index count = std::min(batch, n - start);
                std::vector<Index> rows(order.begin() + start, order.begin() + start + count);
                const MatX clean = layer_data(rows, Eigen::all);
                const MatX noisy = corrupt(clean, cfg.corruption_probability, rng);
                auto [loss, grads] = dae_loss_grad(encoder, decoder, clean, noisy, cfg);
                if (!std::isfinite(loss)) {
                    throw NumericError("pretrain_stack: non-finite loss");
                }
                encoder.weights -= cfg.learning_rate * grads.encoder.weights;
                encoder.biases -= cfg.learning_rate * grads.encoder.biases;
                decoder.weights -= cfg.learning_rate * grads.decoder.weights;
                decoder.biases -= cfg.learning_rate * grads.decoder.biases;
            }
        }

        net.layers[l].weights = encoder.weights;
        net.layers[l].biases = encoder.biases;

        if (l + 1 < n_hidden) {
            MatX z = layer_data * encoder.weights.transpose();
            z.rowwise() += encoder.biases.transpose();
            layer_data = logistic(z);
        }
    }
    return net;
}

} // namespace covar
