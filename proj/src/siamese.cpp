#include "covar/siamese.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "covar/numeric.hpp"

namespace covar {

namespace {

// Largest double below 1: scores live in [0.5, 1) even when the sigmoid
// saturates in floating point.
const double kScoreCap = std::nextafter(1.0, 0.0);

double weight_sq_norm(const SubNetwork& net) {
    double sum = 0.0;
    for (const LayerParams& layer : net.layers) sum += layer.weights.squaredNorm();
    return sum;
}

void check_joint_inputs(const JointNetwork& jn, const MatX& s1, const MatX& s2) {
    if (s1.rows() != s2.rows()) {
        throw ShapeError("joint_forward: batch sizes differ", s1.rows(), s1.cols(), s2.rows(),
                         s2.cols());
    }
    if (s1.cols() != jn.net1.input_dim()) {
        throw ShapeError("joint_forward: sensor-1 input dim", s1.rows(), s1.cols(),
                         jn.net1.input_dim(), 1);
    }
    if (s2.cols() != jn.net2.input_dim()) {
        throw ShapeError("joint_forward: sensor-2 input dim", s2.rows(), s2.cols(),
                         jn.net2.input_dim(), 1);
    }
    if (jn.net1.output_dim() != jn.net2.output_dim()) {
        throw DataError("joint network: branch output dims differ");
    }
}

MatX vstack(const MatX& a, const MatX& b) {
    if (a.rows() == 0) return b;
    if (b.rows() == 0) return a;
    MatX out(a.rows() + b.rows(), a.cols());
    out.topRows(a.rows()) = a;
    out.bottomRows(b.rows()) = b;
    return out;
}

} // namespace

JointForwardResult joint_forward(const JointNetwork& jn, const MatX& s1, const MatX& s2,
                                 const DropoutMask* mask1, const DropoutMask* mask2) {
    check_joint_inputs(jn, s1, s2);
    JointForwardResult result;
    result.cache1 = forward(jn.net1, s1, mask1);
    result.cache2 = forward(jn.net2, s2, mask2);
    const MatX diff = result.cache1.output() - result.cache2.output();
    result.dist_sq = diff.rowwise().squaredNorm();
    result.score.resize(result.dist_sq.size());
    for (Index i = 0; i < result.dist_sq.size(); ++i) {
        result.score[i] = std::min(logistic(result.dist_sq[i]), kScoreCap);
    }
    return result;
}

double siamese_loss(const JointNetwork& jn, const MatX& pos_s1, const MatX& pos_s2,
                    const MatX& neg_s1, const MatX& neg_s2, const LossWeights& w) {
    const Index np = pos_s1.rows();
    const Index nn = neg_s1.rows();
    if (np == 0 && nn == 0) {
        throw DataError("siamese_loss: both batches are empty");
    }
    double loss = w.lambda * (weight_sq_norm(jn.net1) + weight_sq_norm(jn.net2));
    if (np > 0) {
        const JointForwardResult fwd = joint_forward(jn, pos_s1, pos_s2);
        loss += (w.alpha / static_cast<double>(np)) * (0.5 - fwd.score.array()).square().sum();
    }
    if (nn > 0) {
        const JointForwardResult fwd = joint_forward(jn, neg_s1, neg_s2);
        loss += (w.beta / static_cast<double>(nn)) * (1.0 - fwd.score.array()).square().sum();
    }
    return loss;
}

std::pair<double, SiameseGrads> siamese_grad(const JointNetwork& jn, const MatX& pos_s1,
                                             const MatX& pos_s2, const MatX& neg_s1,
                                             const MatX& neg_s2, const LossWeights& w,
                                             const DropoutMask* mask1, const DropoutMask* mask2) {
    const Index np = pos_s1.rows();
    const Index nn = neg_s1.rows();
    if (np == 0 && nn == 0) {
        throw DataError("siamese_grad: both batches are empty");
    }

    // One stacked forward/backward per branch covers both batches.
    const MatX s1 = vstack(pos_s1, neg_s1);
    const MatX s2 = vstack(pos_s2, neg_s2);
    const JointForwardResult fwd = joint_forward(jn, s1, s2, mask1, mask2);

    double loss = w.lambda * (weight_sq_norm(jn.net1) + weight_sq_norm(jn.net2));
    const Index n_rows = s1.rows();
    VecX coef(n_rows);
    for (Index i = 0; i < n_rows; ++i) {
        const bool positive = i < np;
        const double weight = positive ? w.alpha / static_cast<double>(np)
                                       : w.beta / static_cast<double>(nn);
        const double target = positive ? 0.5 : 1.0;
        const double s = fwd.score[i];
        loss += weight * (target - s) * (target - s);
        // d loss_i / d dist_sq_i
        coef[i] = 2.0 * weight * (s - target) * s * (1.0 - s);
    }

    const MatX diff = fwd.cache1.output() - fwd.cache2.output();
    const MatX out_grad1 = (diff.array().colwise() * (2.0 * coef.array())).matrix();
    const MatX out_grad2 = -out_grad1;

    SiameseGrads grads;
    grads.net1 = backward(jn.net1, fwd.cache1, out_grad1).layers;
    grads.net2 = backward(jn.net2, fwd.cache2, out_grad2).layers;
    for (std::size_t l = 0; l < grads.net1.size(); ++l) {
        grads.net1[l].weights += 2.0 * w.lambda * jn.net1.layers[l].weights;
    }
    for (std::size_t l = 0; l < grads.net2.size(); ++l) {
        grads.net2[l].weights += 2.0 * w.lambda * jn.net2.layers[l].weights;
    }
    return {loss, std::move(grads)};
}

TrainResult train_sgd(JointNetwork jn, const MatX& pos_s1, const MatX& pos_s2, const MatX& neg_s1,
                      const MatX& neg_s2, const TrainConfig& cfg) {
    const Index np = pos_s1.rows();
    const Index nn = neg_s1.rows();
    if (np < 1 || nn < 1) {
        throw DataError("train_sgd: positive and negative datasets must be non-empty");
    }
    const SgdConfig& sgd = cfg.sgd;
    if (sgd.learning_rate < 0.0) throw ConfigError("train_sgd: learning_rate must be >= 0");
    if (!(sgd.momentum >= 0.0 && sgd.momentum < 1.0)) {
        throw ConfigError("train_sgd: momentum must be in [0, 1)");
    }
    if (sgd.batch_size < 2) throw ConfigError("train_sgd: batch_size must be >= 2");
    if (!(sgd.keep_probability > 0.0 && sgd.keep_probability <= 1.0)) {
        throw ConfigError("train_sgd: keep_probability must be in (0, 1]");
    }

    RngStream rng(cfg.seed);
    const bool use_dropout = sgd.keep_probability < 1.0;
    const Index half = std::max<Index>(1, sgd.batch_size / 2);
    const Index n_batches = (std::max(np, nn) + half - 1) / half;

    VecX velocity = VecX::Zero(param_count(jn));
    TrainResult result;
    result.trajectory.reserve(static_cast<std::size_t>(sgd.epochs));

    // Indices for one minibatch: `half` rows from this epoch's shuffled
    // order, wrapping modulo the dataset size when counts are unequal.
    auto chunk = [&](const std::vector<Index>& order, Index b) {
        const auto n = static_cast<Index>(order.size());
        std::vector<Index> rows(static_cast<std::size_t>(half));
        for (Index j = 0; j < half; ++j) {
            rows[static_cast<std::size_t>(j)] = order[static_cast<std::size_t>((b * half + j) % n)];
        }
        return rows;
    };

    for (Index epoch = 0; epoch < sgd.epochs; ++epoch) {
        const std::vector<Index> pos_order = random_permutation(np, rng);
        const std::vector<Index> neg_order = random_permutation(nn, rng);
        for (Index b = 0; b < n_batches; ++b) {
            const std::vector<Index> pos_rows = chunk(pos_order, b);
            const std::vector<Index> neg_rows = chunk(neg_order, b);
            const MatX bp1 = pos_s1(pos_rows, Eigen::all);
            const MatX bp2 = pos_s2(pos_rows, Eigen::all);
            const MatX bn1 = neg_s1(neg_rows, Eigen::all);
            const MatX bn2 = neg_s2(neg_rows, Eigen::all);

            DropoutMask mask1, mask2;
            if (use_dropout) {
                mask1 = sample_dropout_mask(jn.net1, sgd.keep_probability, rng);
                mask2 = sample_dropout_mask(jn.net2, sgd.keep_probability, rng);
            }
            auto [batch_loss, grads] =
                siamese_grad(jn, bp1, bp2, bn1, bn2, cfg.loss, use_dropout ? &mask1 : nullptr,
                             use_dropout ? &mask2 : nullptr);
            if (!std::isfinite(batch_loss)) {
                throw NumericError("train_sgd: non-finite minibatch loss at epoch " +
                                   std::to_string(epoch));
            }
            velocity = sgd.momentum * velocity - sgd.learning_rate * pack_grads(grads);
            unpack_params(jn, pack_params(jn) + velocity);
        }
        const double epoch_loss = siamese_loss(jn, pos_s1, pos_s2, neg_s1, neg_s2, cfg.loss);
        if (!std::isfinite(epoch_loss)) {
            throw NumericError("train_sgd: non-finite loss after epoch " + std::to_string(epoch));
        }
        result.trajectory.push_back(epoch_loss);
    }
    result.net = std::move(jn);
    return result;
}

LbfgsResult lbfgs_minimize(const std::function<double(const VecX&, VecX&)>& fg, VecX x0,
                           const LbfgsConfig& cfg) {
    if (cfg.history < 1) throw ConfigError("lbfgs: history must be >= 1");
    if (!(cfg.backtrack > 0.0 && cfg.backtrack < 1.0)) {
        throw ConfigError("lbfgs: backtrack factor must be in (0, 1)");
    }

    LbfgsResult result;
    VecX x = std::move(x0);
    VecX g(x.size());
    double f = fg(x, g);
    if (!std::isfinite(f)) throw NumericError("lbfgs: non-finite objective at start");

    std::vector<VecX> s_hist, y_hist;
    std::vector<double> rho_hist;

    for (Index iter = 0; iter < cfg.max_iters; ++iter) {
        if (g.norm() < cfg.grad_tol) {
            result.converged = true;
            break;
        }

        // Two-loop recursion.
        VecX q = g;
        const auto h = static_cast<Index>(s_hist.size());
        std::vector<double> alpha(static_cast<std::size_t>(h));
        for (Index i = h - 1; i >= 0; --i) {
            const auto ui = static_cast<std::size_t>(i);
            alpha[ui] = rho_hist[ui] * s_hist[ui].dot(q);
            q -= alpha[ui] * y_hist[ui];
        }
        if (h > 0) {
            const auto last = static_cast<std::size_t>(h - 1);
            q *= s_hist[last].dot(y_hist[last]) / y_hist[last].squaredNorm();
        }
        for (Index i = 0; i < h; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            const double beta = rho_hist[ui] * y_hist[ui].dot(q);
            q += (alpha[ui] - beta) * s_hist[ui];
        }
        VecX p = -q;
        double dd = g.dot(p);
        if (!(dd < 0.0)) {
            // Not a descent direction; restart from steepest descent.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            p = -g;
            dd = -g.squaredNorm();
        }

        // Backtracking Armijo line search.
        double t = 1.0;
        bool accepted = false;
        VecX x_new, g_new(x.size());
        double f_new = 0.0;
        for (Index bt = 0; bt <= cfg.max_backtracks; ++bt) {
            x_new = x + t * p;
            f_new = fg(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= f + cfg.c1 * t * dd) {
                accepted = true;
                break;
            }
            t *= cfg.backtrack;
        }
        if (!accepted) {
            result.line_search_failed = true;
            break;
        }

        result.steps.push_back({f, f_new, t, dd});
        VecX s = x_new - x;
        VecX y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (static_cast<Index>(s_hist.size()) > cfg.history) {
                s_hist.erase(s_hist.begin());
                y_hist.erase(y_hist.begin());
                rho_hist.erase(rho_hist.begin());
            }
        }
        x = std::move(x_new);
        g = g_new;
        f = f_new;
        result.trajectory.push_back(f);
        result.iterations = iter + 1;
    }
    if (!result.line_search_failed && !result.converged) {
        result.converged = g.norm() < cfg.grad_tol;
    }
    result.x = std::move(x);
    return result;
}

TrainResult train_lbfgs(JointNetwork jn, const MatX& pos_s1, const MatX& pos_s2,
                        const MatX& neg_s1, const MatX& neg_s2, const TrainConfig& cfg) {
    if (pos_s1.rows() < 1 || neg_s1.rows() < 1) {
        throw DataError("train_lbfgs: positive and negative datasets must be non-empty");
    }
    JointNetwork work = jn;
    auto fg = [&](const VecX& theta, VecX& grad) -> double {
        unpack_params(work, theta);
        auto [loss, grads] = siamese_grad(work, pos_s1, pos_s2, neg_s1, neg_s2, cfg.loss);
        grad = pack_grads(grads);
        return loss;
    };
    LbfgsResult r = lbfgs_minimize(fg, pack_params(jn), cfg.lbfgs);
    unpack_params(work, r.x);

    TrainResult result;
    result.net = std::move(work);
    result.trajectory = std::move(r.trajectory);
    result.converged = r.converged;
    result.line_search_warning = r.line_search_failed;
    result.steps = std::move(r.steps);
    return result;
}

PairPrediction predict_pair(const JointNetwork& jn, const MatX& s1, const MatX& s2) {
    const JointForwardResult fwd = joint_forward(jn, s1, s2);
    PairPrediction pred;
    pred.score = fwd.score;
    pred.is_positive.resize(static_cast<std::size_t>(fwd.score.size()));
    for (Index i = 0; i < fwd.score.size(); ++i) {
        pred.is_positive[static_cast<std::size_t>(i)] = classify_positive(fwd.score[i]);
    }
    return pred;
}

Index param_count(const JointNetwork& jn) { return param_count(jn.net1) + param_count(jn.net2); }

VecX pack_params(const JointNetwork& jn) {
    VecX theta(param_count(jn));
    theta.head(param_count(jn.net1)) = pack_params(jn.net1);
    theta.tail(param_count(jn.net2)) = pack_params(jn.net2);
    return theta;
}

void unpack_params(JointNetwork& jn, const VecX& theta) {
    if (theta.size() != param_count(jn)) {
        throw DataError("unpack_params: parameter vector has wrong length");
    }
    unpack_params(jn.net1, theta.head(param_count(jn.net1)).eval());
    unpack_params(jn.net2, theta.tail(param_count(jn.net2)).eval());
}

VecX pack_grads(const SiameseGrads& grads) {
    const VecX g1 = pack_grads(grads.net1);
    const VecX g2 = pack_grads(grads.net2);
    VecX flat(g1.size() + g2.size());
    flat.head(g1.size()) = g1;
    flat.tail(g2.size()) = g2;
    return flat;
}

} // namespace covar
