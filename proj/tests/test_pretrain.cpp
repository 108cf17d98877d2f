#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "covar/numeric.hpp"
#include "covar/pretrain.hpp"
#include "test_support.hpp"

using namespace covar;

TEST_CASE("corrupt: p = 0 is the identity") {
    RngStream rng(1);
    const MatX input = test::random_matrix(rng, 4, 5);
    CHECK(corrupt(input, 0.0, rng) == input);
}

TEST_CASE("corrupt: zeroed fraction concentrates at p") {
    RngStream rng(2);
    const MatX input = MatX::Ones(200, 500); // 1e5 nonzero entries
    const MatX noisy = corrupt(input, 0.3, rng);
    const double zero_fraction =
        1.0 - noisy.sum() / static_cast<double>(input.size());
    CHECK(zero_fraction >= 0.29);
    CHECK(zero_fraction <= 0.31);
    // Entries are either kept verbatim or zeroed.
    CHECK(((noisy.array() == 0.0) || (noisy.array() == 1.0)).all());
}

TEST_CASE("corrupt: all-zero input stays all-zero") {
    RngStream rng(3);
    const MatX input = MatX::Zero(10, 10);
    CHECK(corrupt(input, 0.5, rng) == input);
}

TEST_CASE("corrupt: p out of range throws") {
    RngStream rng(4);
    const MatX input = MatX::Ones(2, 2);
    CHECK_THROWS_AS(corrupt(input, 1.0, rng), ConfigError);
    CHECK_THROWS_AS(corrupt(input, -0.1, rng), ConfigError);
}

TEST_CASE("kl_bernoulli: non-negative, zero only at equality") {
    for (double rho : {0.05, 0.1, 0.5, 0.9}) {
        CHECK(kl_bernoulli(rho, rho) == 0.0);
        for (double rho_hat = 0.02; rho_hat < 1.0; rho_hat += 0.02) {
            const double kl = kl_bernoulli(rho, rho_hat);
            CHECK(kl >= 0.0);
            if (std::abs(rho - rho_hat) > 1e-12) CHECK(kl > 0.0);
        }
    }
}

namespace {

DaeConfig test_cfg() {
    DaeConfig cfg;
    cfg.sparsity_target = 0.5; // logistic(0) == 0.5 exactly
    cfg.sparsity_weight = 0.7;
    return cfg;
}

} // namespace

TEST_CASE("dae_loss_grad: perfect reconstruction at the sparsity target is lossless") {
    // Encoder ignores its input (zero weights, zero bias): hidden == 0.5
    // exactly, so rho_hat == rho == 0.5. The decoder outputs the constant
    // batch row, so reconstruction is exact.
    const Index d = 3, h = 2;
    LayerParams encoder{MatX::Zero(h, d), VecX::Zero(h), Activation::logistic};
    VecX row(d);
    row << 0.2, -1.0, 0.7;
    LayerParams decoder{MatX::Zero(d, h), 2.0 * row, Activation::linear};
    const MatX clean = (0.5 * MatX::Ones(4, 1)) * (2.0 * row).transpose() * 0.5 +
                       0.5 * MatX::Ones(4, 1) * row.transpose();
    // clean rows all equal decoder bias: build directly instead.
    MatX clean2 = MatX::Zero(4, d);
    clean2.rowwise() += (2.0 * row).transpose();
    RngStream rng(5);
    const MatX corrupted = test::random_matrix(rng, 4, d);

    auto [loss, grads] = dae_loss_grad(encoder, decoder, clean2, corrupted, test_cfg());
    CHECK(loss == 0.0);
    CHECK(grads.decoder.weights.isZero(0.0));
    CHECK(grads.decoder.biases.isZero(0.0));
}

TEST_CASE("dae_loss_grad: KL term vanishes at rho_hat == rho regardless of reconstruction") {
    const Index d = 3, h = 2;
    LayerParams encoder{MatX::Zero(h, d), VecX::Zero(h), Activation::logistic};
    RngStream rng(6);
    LayerParams decoder{test::random_matrix(rng, d, h), rng.draw_gaussian(d), Activation::linear};
    const MatX clean = test::random_matrix(rng, 5, d);
    const MatX corrupted = clean;

    DaeConfig with_kl = test_cfg();
    DaeConfig without_kl = test_cfg();
    without_kl.sparsity_weight = 0.0;
    const double loss_with = dae_loss_grad(encoder, decoder, clean, corrupted, with_kl).first;
    const double loss_without =
        dae_loss_grad(encoder, decoder, clean, corrupted, without_kl).first;
    CHECK(loss_with == loss_without);

    // And matches the mean squared reconstruction error computed by hand.
    MatX recon = (logistic((corrupted * encoder.weights.transpose()).eval()) *
                  decoder.weights.transpose());
    recon.rowwise() += decoder.biases.transpose();
    const double expected = (recon - clean).squaredNorm() / static_cast<double>(clean.rows());
    CHECK(loss_without == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("dae_loss_grad: gradients match finite differences") {
    RngStream rng(424242);
    for (int trial = 0; trial < 10; ++trial) {
        const auto d = static_cast<Index>(2 + rng.index_below(6));
        const auto h = static_cast<Index>(1 + rng.index_below(6));
        LayerParams encoder{test::random_matrix(rng, h, d, 0.7), 0.3 * rng.draw_gaussian(h),
                            Activation::logistic};
        LayerParams decoder{test::random_matrix(rng, d, h, 0.7), 0.3 * rng.draw_gaussian(d),
                            Activation::linear};
        const auto n = static_cast<Index>(1 + rng.index_below(5));
        const MatX clean = test::random_matrix(rng, n, d);
        const MatX corrupted = corrupt(clean, 0.3, rng);
        DaeConfig cfg;
        cfg.sparsity_target = 0.2;
        cfg.sparsity_weight = 0.5;

        auto [loss, grads] = dae_loss_grad(encoder, decoder, clean, corrupted, cfg);
        CHECK(std::isfinite(loss));

        // Pack (encoder W, encoder b, decoder W, decoder b) into one vector.
        const Index ew = encoder.weights.size(), eb = encoder.biases.size();
        const Index dw = decoder.weights.size(), db = decoder.biases.size();
        VecX theta(ew + eb + dw + db);
        theta << Eigen::Map<const VecX>(encoder.weights.data(), ew), encoder.biases,
            Eigen::Map<const VecX>(decoder.weights.data(), dw), decoder.biases;
        VecX analytic(theta.size());
        analytic << Eigen::Map<const VecX>(grads.encoder.weights.data(), ew), grads.encoder.biases,
            Eigen::Map<const VecX>(grads.decoder.weights.data(), dw), grads.decoder.biases;

        auto loss_at = [&](const VecX& t) {
            LayerParams e = encoder, dcd = decoder;
            Eigen::Map<VecX>(e.weights.data(), ew) = t.segment(0, ew);
            e.biases = t.segment(ew, eb);
            Eigen::Map<VecX>(dcd.weights.data(), dw) = t.segment(ew + eb, dw);
            dcd.biases = t.segment(ew + eb + dw, db);
            return dae_loss_grad(e, dcd, clean, corrupted, cfg).first;
        };
        const VecX numeric = test::finite_difference(loss_at, theta);
        CHECK(test::gradient_rel_err(analytic, numeric) <= 1e-5);
    }
}

TEST_CASE("pretrain_stack: zero epochs returns the network unchanged") {
    RngStream rng(7);
    const SubNetwork net =
        init_weights(6, {{4, Activation::tanh}, {3, Activation::linear}}, rng);
    const MatX data = test::random_matrix(rng, 10, 6);
    DaeConfig cfg;
    cfg.epochs = 0;
    const SubNetwork out = pretrain_stack(net, data, cfg);
    CHECK(pack_params(out) == pack_params(net));
}

TEST_CASE("pretrain_stack: reconstruction improves and output layer is untouched") {
    int improved = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        RngStream rng(900 + seed);
        SubNetwork net =
            init_weights(8, {{5, Activation::tanh}, {3, Activation::linear}}, rng);
        MatX data = test::random_matrix(rng, 60, 8);

        DaeConfig cfg;
        cfg.epochs = 50;
        cfg.learning_rate = 0.05;
        cfg.corruption_probability = 0.2;
        cfg.sparsity_weight = 0.01;
        cfg.seed = seed;

        // Reconstruction loss of layer 1 before/after, with a fixed probe
        // decoder state and no corruption so only the encoder matters.
        auto recon_loss = [&](const SubNetwork& n) {
            RngStream probe_rng(1234);
            LayerParams probe =
                init_weights(n.layers[0].out_dim(), {{8, Activation::linear}}, probe_rng)
                    .layers.front();
            DaeConfig probe_cfg = cfg;
            probe_cfg.sparsity_weight = 0.0;
            return dae_loss_grad(n.layers[0], probe, data, data, probe_cfg).first;
        };
        (void)recon_loss;

        const VecX before_out = pack_params(net).tail(net.layers[1].weights.size() +
                                                      net.layers[1].biases.size());
        // Direct check: a trained DAE reconstructs held-out data better than
        // the random initialization does through an optimally refit linear
        // decoder; proxy via total loss decrease over training epochs.
        DaeConfig track = cfg;
        track.epochs = 1;
        SubNetwork after_one = pretrain_stack(net, data, track);
        track.epochs = 50;
        SubNetwork trained = pretrain_stack(net, data, track);

        const VecX after_out = pack_params(trained).tail(net.layers[1].weights.size() +
                                                         net.layers[1].biases.size());
        CHECK(before_out == after_out);

        // Compare direct DAE loss with a shared fresh decoder.
        RngStream dec_rng(55);
        LayerParams dec =
            init_weights(5, {{8, Activation::linear}}, dec_rng).layers.front();
        DaeConfig eval_cfg = cfg;
        eval_cfg.sparsity_weight = 0.0;
        const double loss_初 = 0.0;
        (void)loss_初;
        const double loss_before = dae_loss_grad(net.layers[0], dec, data, data, eval_cfg).first;
        const double loss_after =
            dae_loss_grad(trained.layers[0], dec, data, data, eval_cfg).first;
        if (loss_after < loss_before) ++improved;
        (void)after_one;
    }
    CHECK(improved >= 3);
}

TEST_CASE("pretrain_stack: deterministic given the seed") {
    RngStream rng(8);
    const SubNetwork net =
        init_weights(6, {{4, Activation::tanh}, {2, Activation::linear}}, rng);
    const MatX data = test::random_matrix(rng, 30, 6);
    DaeConfig cfg;
    cfg.epochs = 5;
    cfg.seed = 77;
    const SubNetwork a = pretrain_stack(net, data, cfg);
    const SubNetwork b = pretrain_stack(net, data, cfg);
    CHECK(pack_params(a) == pack_params(b));
}
