#include "covar/mlp.hpp"

#include <cmath>

namespace covar {

const char* to_string(Activation a) {
    switch (a) {
        case Activation::logistic: return "logistic";
        case Activation::tanh: return "tanh";
        case Activation::linear: return "linear";
    }
    return "?";
}

Activation activation_from_string(const std::string& name) {
    if (name == "logistic") return Activation::logistic;
    if (name == "tanh") return Activation::tanh;
    if (name == "linear") return Activation::linear;
    throw ConfigError("unknown activation '" + name + "'");
}

namespace {

MatX apply_activation(Activation act, const MatX& z) {
    switch (act) {
        case Activation::logistic: return logistic(z);
        case Activation::tanh: return z.array().tanh().matrix();
        case Activation::linear: return z;
    }
    return z;
}

// Derivative of the activation expressed through its own output value.
Eigen::ArrayXXd activation_deriv_from_output(Activation act, const MatX& a) {
    switch (act) {
        case Activation::logistic: return a.array() * (1.0 - a.array());
        case Activation::tanh: return 1.0 - a.array().square();
        case Activation::linear: return Eigen::ArrayXXd::Ones(a.rows(), a.cols());
    }
    return Eigen::ArrayXXd::Ones(a.rows(), a.cols());
}

} // namespace

SubNetwork init_weights(Index input_dim, const std::vector<LayerSpec>& layers, RngStream& rng) {
    if (layers.empty()) {
        throw ConfigError("init_weights: layer list is empty");
    }
    if (input_dim < 1) {
        throw ConfigError("init_weights: input_dim must be >= 1");
    }
    SubNetwork net;
    Index fan_in = input_dim;
    for (const LayerSpec& spec : layers) {
        if (spec.out_dim < 1) {
            throw ConfigError("init_weights: layer dims must be >= 1");
        }
        LayerParams layer;
        layer.activation = spec.activation;
        layer.weights.resize(spec.out_dim, fan_in);
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + spec.out_dim));
        for (Index r = 0; r < spec.out_dim; ++r) {
            for (Index c = 0; c < fan_in; ++c) {
                layer.weights(r, c) = rng.uniform(-bound, bound);
            }
        }
        layer.biases = VecX::Zero(spec.out_dim);
        net.layers.push_back(std::move(layer));
        fan_in = spec.out_dim;
    }
    return net;
}

void scale_output_layer(SubNetwork& net, double scale) {
    net.layers.back().weights *= scale;
}

ForwardCache forward(const SubNetwork& net, const MatX& input, const DropoutMask* mask) {
    if (input.cols() != net.input_dim()) {
        throw ShapeError("forward: input vs network input_dim", input.rows(), input.cols(),
                         net.input_dim(), 1);
    }
    const auto n_layers = static_cast<Index>(net.layers.size());
    if (mask != nullptr) {
        if (static_cast<Index>(mask->unit_masks.size()) != n_layers - 1) {
            throw DataError("forward: dropout mask layer count does not match network");
        }
        for (Index l = 0; l + 1 < n_layers; ++l) {
            if (mask->unit_masks[static_cast<std::size_t>(l)].size() != net.layers[static_cast<std::size_t>(l)].out_dim()) {
                throw DataError("forward: dropout mask dims do not match network");
            }
        }
    }

    ForwardCache cache;
    cache.activations.reserve(static_cast<std::size_t>(n_layers) + 1);
    cache.activations.push_back(input);
    if (mask != nullptr) {
        cache.mask = *mask;
        cache.pre_dropout.resize(static_cast<std::size_t>(n_layers));
    }

    for (Index l = 0; l < n_layers; ++l) {
        const LayerParams& layer = net.layers[static_cast<std::size_t>(l)];
        MatX z = cache.activations.back() * layer.weights.transpose();
        z.rowwise() += layer.biases.transpose();
        MatX a = apply_activation(layer.activation, z);
        const bool masked = mask != nullptr && l + 1 < n_layers;
        if (mask != nullptr) {
            cache.pre_dropout[static_cast<std::size_t>(l)] = a;
        }
        if (masked) {
            const VecX& m = mask->unit_masks[static_cast<std::size_t>(l)];
            a.array().rowwise() *= (m.array() / mask->keep_probability).transpose();
        }
        cache.activations.push_back(std::move(a));
    }
    return cache;
}

BackwardResult backward(const SubNetwork& net, const ForwardCache& cache, const MatX& output_grad) {
    const auto n_layers = static_cast<Index>(net.layers.size());
    if (static_cast<Index>(cache.activations.size()) != n_layers + 1) {
        throw DataError("backward: cache does not match network depth");
    }
    if (output_grad.rows() != cache.output().rows() || output_grad.cols() != cache.output().cols()) {
        throw ShapeError("backward: output_grad vs forward output", output_grad.rows(),
                         output_grad.cols(), cache.output().rows(), cache.output().cols());
    }
    for (Index l = 0; l < n_layers; ++l) {
        if (cache.activations[static_cast<std::size_t>(l)].cols() != net.layers[static_cast<std::size_t>(l)].in_dim()) {
            throw DataError("backward: cache activations do not match layer dims");
        }
    }

    BackwardResult result;
    result.layers.resize(static_cast<std::size_t>(n_layers));

    const bool has_mask = cache.mask.has_value();
    MatX grad_a = output_grad; // dL/d(activation fed forward from layer l)
    for (Index l = n_layers - 1; l >= 0; --l) {
        const LayerParams& layer = net.layers[static_cast<std::size_t>(l)];
        const bool masked = has_mask && l + 1 < n_layers;
        if (masked) {
            const VecX& m = cache.mask->unit_masks[static_cast<std::size_t>(l)];
            grad_a.array().rowwise() *= (m.array() / cache.mask->keep_probability).transpose();
        }
        const MatX& a_raw =
            has_mask ? cache.pre_dropout[static_cast<std::size_t>(l)] : cache.activations[static_cast<std::size_t>(l) + 1];
        MatX grad_z = (grad_a.array() * activation_deriv_from_output(layer.activation, a_raw)).matrix();
        const MatX& a_prev = cache.activations[static_cast<std::size_t>(l)];
        result.layers[static_cast<std::size_t>(l)].weights = grad_z.transpose() * a_prev;
        result.layers[static_cast<std::size_t>(l)].biases = grad_z.colwise().sum().transpose();
        grad_a = grad_z * layer.weights;
    }
    result.input_grad = std::move(grad_a);
    return result;
}

DropoutMask sample_dropout_mask(const SubNetwork& net, double keep_probability, RngStream& rng) {
    if (!(keep_probability > 0.0 && keep_probability <= 1.0)) {
        throw ConfigError("sample_dropout_mask: keep_probability must be in (0, 1]");
    }
    DropoutMask mask;
    mask.keep_probability = keep_probability;
    const auto n_hidden = static_cast<std::size_t>(net.hidden_layer_count());
    mask.unit_masks.reserve(n_hidden);
    for (std::size_t l = 0; l < n_hidden; ++l) {
        VecX m(net.layers[l].out_dim());
        for (Index j = 0; j < m.size(); ++j) {
            m[j] = rng.uniform01() < keep_probability ? 1.0 : 0.0;
        }
        mask.unit_masks.push_back(std::move(m));
    }
    return mask;
}

Index param_count(const SubNetwork& net) {
    Index count = 0;
    for (const LayerParams& layer : net.layers) {
        count += layer.weights.size() + layer.biases.size();
    }
    return count;
}

VecX pack_params(const SubNetwork& net) {
    VecX theta(param_count(net));
    Index pos = 0;
    for (const LayerParams& layer : net.layers) {
        theta.segment(pos, layer.weights.size()) =
            Eigen::Map<const VecX>(layer.weights.data(), layer.weights.size());
        pos += layer.weights.size();
        theta.segment(pos, layer.biases.size()) = layer.biases;
        pos += layer.biases.size();
    }
    return theta;
}

void unpack_params(SubNetwork& net, const VecX& theta) {
    if (theta.size() != param_count(net)) {
        throw DataError("unpack_params: parameter vector has wrong length");
    }
    Index pos = 0;
    for (LayerParams& layer : net.layers) {
        Eigen::Map<VecX>(layer.weights.data(), layer.weights.size()) =
            theta.segment(pos, layer.weights.size());
        pos += layer.weights.size();
        layer.biases = theta.segment(pos, layer.biases.size());
        pos += layer.biases.size();
    }
}

VecX pack_grads(const std::vector<LayerGrads>& grads) {
    Index total = 0;
    for (const LayerGrads& g : grads) total += g.weights.size() + g.biases.size();
    VecX flat(total);
    Index pos = 0;
    for (const LayerGrads& g : grads) {
        flat.segment(pos, g.weights.size()) = Eigen::Map<const VecX>(g.weights.data(), g.weights.size());
        pos += g.weights.size();
        flat.segment(pos, g.biases.size()) = g.biases;
        pos += g.biases.size();
    }
    return flat;
}

} // namespace covar
