// Feed-forward sub-networks: layer stacks with forward pass, exact
// reverse-mode gradients, and inverted dropout.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "covar/numeric.hpp"
#include "covar/rng.hpp"
#include "covar/types.hpp"

namespace covar {

enum class Activation { logistic, tanh, linear };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct LayerParams {
    MatX weights; // out_dim x in_dim
    VecX biases;  // out_dim
    Activation activation = Activation::tanh;

    Index in_dim() const { return weights.cols(); }
    Index out_dim() const { return weights.rows(); }
};

struct SubNetwork {
    std::vector<LayerParams> layers;

    Index input_dim() const { return layers.front().in_dim(); }
    Index output_dim() const { return layers.back().out_dim(); }
    Index hidden_layer_count() const { return static_cast<Index>(layers.size()) - 1; }
};

struct LayerSpec {
    Index out_dim = 0;
    Activation activation = Activation::tanh;
};

/// One 0/1 mask vector per hidden layer, shared across the rows of a batch.
/// The output layer is never masked.
struct DropoutMask {
    std::vector<VecX> unit_masks;
    double keep_probability = 1.0;
};

/// Everything the backward pass needs: activations[0] is the input,
/// activations[l] the output of layer l as fed to the next layer (after
/// dropout, when a mask was applied). pre_dropout holds the unmasked
/// activations and is only populated when a mask was used.
struct ForwardCache {
    std::vector<MatX> activations;
    std::vector<MatX> pre_dropout;
    std::optional<DropoutMask> mask;

    const MatX& output() const { return activations.back(); }
};

struct LayerGrads {
    MatX weights; // same shape as LayerParams::weights
    VecX biases;
};

struct BackwardResult {
    std::vector<LayerGrads> layers;
    MatX input_grad;
};

/// Seeded initialization: weights uniform in the fan-balanced interval
/// [-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))], biases zero.
SubNetwork init_weights(Index input_dim, const std::vector<LayerSpec>& layers, RngStream& rng);

/// Multiplies the last layer's weights by `scale`. Training pipelines use a
/// small scale so the initial output-distance distribution does not saturate
/// the comparison sigmoid.
void scale_output_layer(SubNetwork& net, double scale);

/// Batch forward pass (one sample per row). With a mask, hidden activations
/// are multiplied by the mask and rescaled by 1/keep_probability (inverted
/// dropout), so inference needs no rescaling.
ForwardCache forward(const SubNetwork& net, const MatX& input, const DropoutMask* mask = nullptr);

/// Exact gradients of the computation recorded in `cache`, seeded with
/// dL/d(output) = output_grad. Gradients are summed over the batch rows.
BackwardResult backward(const SubNetwork& net, const ForwardCache& cache, const MatX& output_grad);

/// Independent Bernoulli(keep_probability) mask per hidden unit.
DropoutMask sample_dropout_mask(const SubNetwork& net, double keep_probability, RngStream& rng);

// Flat parameter vector helpers (layer order; per layer: row-major weights,
// then biases). Used by the optimizers and by gradient checks.
Index param_count(const SubNetwork& net);
VecX pack_params(const SubNetwork& net);
void unpack_params(SubNetwork& net, const VecX& theta);
VecX pack_grads(const std::vector<LayerGrads>& grads);

} // namespace covar
