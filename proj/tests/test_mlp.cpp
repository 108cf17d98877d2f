#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "covar/mlp.hpp"
#include "test_support.hpp"

using namespace covar;

TEST_CASE("init_weights: zero biases and seeded determinism") {
    RngStream rng(1);
    const SubNetwork net = init_weights(2, {{3, Activation::tanh}}, rng);
    CHECK(net.layers.size() == 1);
    CHECK(net.layers[0].biases.isZero(0.0));
    CHECK(net.input_dim() == 2);
    CHECK(net.output_dim() == 3);

    RngStream r1(99), r2(99);
    const SubNetwork a = init_weights(4, {{5, Activation::tanh}, {2, Activation::linear}}, r1);
    const SubNetwork b = init_weights(4, {{5, Activation::tanh}, {2, Activation::linear}}, r2);
    CHECK(pack_params(a) == pack_params(b));
}

TEST_CASE("init_weights: fan-balanced bound holds empirically") {
    RngStream rng(17);
    const SubNetwork net = init_weights(100, {{100, Activation::tanh}}, rng);
    const double bound = std::sqrt(6.0 / 200.0);
    CHECK(net.layers[0].weights.cwiseAbs().maxCoeff() <= bound);
    // With 10^4 draws the empirical max should come close to the bound.
    CHECK(net.layers[0].weights.cwiseAbs().maxCoeff() > 0.95 * bound);
}

TEST_CASE("init_weights: empty layer list is rejected") {
    RngStream rng(1);
    CHECK_THROWS_AS(init_weights(3, {}, rng), ConfigError);
}

TEST_CASE("forward: zero parameters with logistic give 0.5 everywhere") {
    SubNetwork net;
    net.layers.push_back({MatX::Zero(4, 3), VecX::Zero(4), Activation::logistic});
    RngStream rng(5);
    const MatX input = test::random_matrix(rng, 6, 3);
    const MatX out = forward(net, input).output();
    CHECK(out.rows() == 6);
    CHECK(out.cols() == 4);
    CHECK((out.array() == 0.5).all());
}

TEST_CASE("forward: identity linear layer reproduces the input") {
    SubNetwork net;
    net.layers.push_back({MatX::Identity(3, 3), VecX::Zero(3), Activation::linear});
    RngStream rng(6);
    const MatX input = test::random_matrix(rng, 4, 3);
    CHECK(forward(net, input).output() == input);
}

TEST_CASE("forward: agrees with the scalar-loop oracle") {
    RngStream rng(1234);
    for (int trial = 0; trial < 20; ++trial) {
        const auto input_dim = static_cast<Index>(1 + rng.index_below(6));
        const SubNetwork net = test::random_small_net(rng, input_dim);
        const MatX input = test::random_matrix(rng, 3, input_dim);
        const MatX out = forward(net, input).output();
        for (Index r = 0; r < input.rows(); ++r) {
            std::vector<double> row(static_cast<std::size_t>(input_dim));
            for (Index c = 0; c < input_dim; ++c) row[static_cast<std::size_t>(c)] = input(r, c);
            const std::vector<double> expected = test::forward_oracle(net, row);
            for (Index c = 0; c < out.cols(); ++c) {
                CHECK(std::abs(out(r, c) - expected[static_cast<std::size_t>(c)]) <= 1e-12);
            }
        }
    }
}

TEST_CASE("forward: input dim mismatch throws") {
    RngStream rng(8);
    const SubNetwork net = init_weights(5, {{2, Activation::tanh}}, rng);
    CHECK_THROWS_AS(forward(net, MatX::Zero(1, 4)), ShapeError);
}

TEST_CASE("backward: zero output gradient zeroes every parameter gradient") {
    RngStream rng(21);
    const SubNetwork net = test::random_small_net(rng, 4);
    const MatX input = test::random_matrix(rng, 2, 4);
    const ForwardCache cache = forward(net, input);
    const BackwardResult grads =
        backward(net, cache, MatX::Zero(2, net.output_dim()));
    for (const LayerGrads& g : grads.layers) {
        CHECK(g.weights.isZero(0.0));
        CHECK(g.biases.isZero(0.0));
    }
}

TEST_CASE("backward: hand-checked linear 1->1 layer") {
    SubNetwork net;
    MatX w(1, 1);
    w << 1.7;
    VecX b(1);
    b << -0.4;
    net.layers.push_back({w, b, Activation::linear});

    MatX input(1, 1);
    input << 2.5;
    const ForwardCache cache = forward(net, input);
    const BackwardResult grads = backward(net, cache, MatX::Ones(1, 1));
    CHECK(grads.layers[0].weights(0, 0) == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(grads.layers[0].biases[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(grads.input_grad(0, 0) == doctest::Approx(1.7).epsilon(1e-15));
}

namespace {

// Loss 1/2 |f(input)|^2 as a function of the packed parameters.
double half_sq_loss(SubNetwork net, const VecX& theta, const MatX& input) {
    unpack_params(net, theta);
    return 0.5 * forward(net, input).output().squaredNorm();
}

} // namespace

TEST_CASE("backward: gradients match central finite differences") {
    RngStream rng(31337);
    for (int trial = 0; trial < 15; ++trial) {
        const auto input_dim = static_cast<Index>(1 + rng.index_below(6));
        SubNetwork net = test::random_small_net(rng, input_dim);
        const auto batch = static_cast<Index>(1 + rng.index_below(4));
        const MatX input = test::random_matrix(rng, batch, input_dim);

        const ForwardCache cache = forward(net, input);
        const BackwardResult analytic = backward(net, cache, cache.output());
        const VecX analytic_flat = pack_grads(analytic.layers);

        const VecX theta = pack_params(net);
        const VecX numeric = test::finite_difference(
            [&](const VecX& t) { return half_sq_loss(net, t, input); }, theta);
        CHECK(test::gradient_rel_err(analytic_flat, numeric) <= 1e-5);
    }
}

TEST_CASE("dropout: keep probability one is an exact no-op") {
    RngStream rng(3);
    const SubNetwork net = init_weights(4, {{8, Activation::tanh}, {2, Activation::linear}}, rng);
    const DropoutMask mask = sample_dropout_mask(net, 1.0, rng);
    REQUIRE(mask.unit_masks.size() == 1);
    CHECK((mask.unit_masks[0].array() == 1.0).all());

    const MatX input = test::random_matrix(rng, 5, 4);
    CHECK(forward(net, input, &mask).output() == forward(net, input).output());
}

TEST_CASE("dropout: mask mean concentrates at the keep probability") {
    RngStream rng(4);
    const SubNetwork net =
        init_weights(2, {{10000, Activation::tanh}, {1, Activation::linear}}, rng);
    const DropoutMask mask = sample_dropout_mask(net, 0.5, rng);
    const double mean = mask.unit_masks[0].mean();
    CHECK(mean >= 0.48);
    CHECK(mean <= 0.52);
    for (Index i = 0; i < 100; ++i) {
        const double v = mask.unit_masks[0][i];
        CHECK((v == 0.0 || v == 1.0));
    }
}

TEST_CASE("dropout: keep probability out of range throws") {
    RngStream rng(4);
    const SubNetwork net = init_weights(2, {{3, Activation::tanh}, {1, Activation::linear}}, rng);
    CHECK_THROWS_AS(sample_dropout_mask(net, 0.0, rng), ConfigError);
    CHECK_THROWS_AS(sample_dropout_mask(net, 1.5, rng), ConfigError);
}

TEST_CASE("dropout: masked backward matches finite differences") {
    RngStream rng(777);
    for (int trial = 0; trial < 5; ++trial) {
        SubNetwork net = init_weights(
            3, {{4, Activation::tanh}, {3, Activation::logistic}, {2, Activation::linear}}, rng);
        const MatX input = test::random_matrix(rng, 2, 3);
        const DropoutMask mask = sample_dropout_mask(net, 0.7, rng);

        const ForwardCache cache = forward(net, input, &mask);
        const BackwardResult analytic = backward(net, cache, cache.output());
        const VecX theta = pack_params(net);
        const VecX numeric = test::finite_difference(
            [&](const VecX& t) {
                SubNetwork probe = net;
                unpack_params(probe, t);
                return 0.5 * forward(probe, input, &mask).output().squaredNorm();
            },
            theta);
        CHECK(test::gradient_rel_err(pack_grads(analytic.layers), numeric) <= 1e-5);
    }
}

TEST_CASE("dropout: inverted rescale is unbiased on a linear stack") {
    RngStream rng(99);
    SubNetwork net =
        init_weights(3, {{6, Activation::linear}, {2, Activation::linear}}, rng);
    const MatX input = test::random_matrix(rng, 1, 3);
    const MatX reference = forward(net, input).output();

    MatX accum = MatX::Zero(1, 2);
    const int n_masks = 20000;
    for (int i = 0; i < n_masks; ++i) {
        const DropoutMask mask = sample_dropout_mask(net, 0.5, rng);
        accum += forward(net, input, &mask).output();
    }
    accum /= static_cast<double>(n_masks);
    const double rel = (accum - reference).norm() / reference.norm();
    CHECK(rel <= 0.02);
}

TEST_CASE("pack/unpack round-trips the parameters") {
    RngStream rng(11);
    SubNetwork net = test::random_small_net(rng, 5);
    const VecX theta = pack_params(net);
    SubNetwork copy = net;
    unpack_params(copy, theta);
    CHECK(pack_params(copy) == theta);
    CHECK(param_count(net) == theta.size());
}
