// Joint two-branch network with the fixed comparison unit score(s1, s2) =
// logistic(|f1(s1) - f2(s2)|^2), its contrastive loss, and two trainers.
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "covar/mlp.hpp"
#include "covar/rng.hpp"
#include "covar/types.hpp"

namespace covar {

struct JointNetwork {
    SubNetwork net1; // f1
    SubNetwork net2; // f2
};

struct LossWeights {
    double alpha = 1.0;   // weight of the positive-pair term
    double beta = 1.0;    // weight of the negative-pair term
    double lambda = 1e-4; // L2 penalty on weight matrices (biases excluded)
};

struct SgdConfig {
    double learning_rate = 0.05;
    double momentum = 0.9; // in [0, 1)
    Index batch_size = 128;
    Index epochs = 30;
    double keep_probability = 1.0; // dropout keep rate; 1 disables dropout
};

struct LbfgsConfig {
    Index history = 10;      // stored (s, y) pairs
    Index max_iters = 200;
    double c1 = 1e-4;        // Armijo sufficient-decrease constant
    double backtrack = 0.5;  // step shrink factor per backtrack
    double grad_tol = 1e-6;  // stop when |grad| falls below this
    Index max_backtracks = 50;
};

enum class Optimizer { sgd_momentum, lbfgs };

struct TrainConfig {
    LossWeights loss;
    Optimizer optimizer = Optimizer::sgd_momentum;
    SgdConfig sgd;
    LbfgsConfig lbfgs;
    std::uint64_t seed = 0;
};

/// Per-pair comparison of a batch: score_i = logistic(dist_sq_i), with
/// dist_sq_i the squared Euclidean distance between the two branch outputs.
/// Scores are capped at the largest double below 1 so they stay in [0.5, 1).
struct JointForwardResult {
    VecX score;
    VecX dist_sq;
    ForwardCache cache1;
    ForwardCache cache2;
};

JointForwardResult joint_forward(const JointNetwork& jn, const MatX& s1, const MatX& s2,
                                 const DropoutMask* mask1 = nullptr,
                                 const DropoutMask* mask2 = nullptr);

/// Contrastive loss over a positive and a negative batch:
///   alpha/n_pos * sum (1/2 - score)^2  +  beta/n_neg * sum (1 - score)^2
///   + lambda * (sum of squared weight-matrix entries of both branches).
/// Either batch may be empty (0 rows), but not both. Biases are not
/// regularized.
double siamese_loss(const JointNetwork& jn, const MatX& pos_s1, const MatX& pos_s2,
                    const MatX& neg_s1, const MatX& neg_s2, const LossWeights& w);

struct SiameseGrads {
    std::vector<LayerGrads> net1;
    std::vector<LayerGrads> net2;
};

/// Loss plus exact parameter gradients. When dropout masks are given they are
/// applied in the branch forward passes and their backpropagation.
std::pair<double, SiameseGrads> siamese_grad(const JointNetwork& jn, const MatX& pos_s1,
                                             const MatX& pos_s2, const MatX& neg_s1,
                                             const MatX& neg_s2, const LossWeights& w,
                                             const DropoutMask* mask1 = nullptr,
                                             const DropoutMask* mask2 = nullptr);

/// One accepted line-search step of the L-BFGS run.
struct LbfgsStep {
    double loss_before = 0.0;
    double loss_after = 0.0;
    double step_size = 0.0;
    double directional_derivative = 0.0;
};

struct TrainResult {
    JointNetwork net;
    std::vector<double> trajectory; // full-data loss per epoch / iteration
    bool converged = false;             // L-BFGS only: gradient tolerance reached
    bool line_search_warning = false;   // L-BFGS only: search failed, stopped early
    std::vector<LbfgsStep> steps;       // L-BFGS only
};

/// Minibatch SGD with classical momentum and fresh dropout masks per
/// minibatch. Each minibatch draws batch_size/2 positives and batch_size/2
/// negatives from per-epoch seeded shuffles; the recorded trajectory holds
/// the full-data loss (without dropout) once per epoch. Throws NumericError
/// as soon as a loss turns non-finite.
TrainResult train_sgd(JointNetwork jn, const MatX& pos_s1, const MatX& pos_s2,
                      const MatX& neg_s1, const MatX& neg_s2, const TrainConfig& cfg);

/// Generic L-BFGS minimizer (two-loop recursion, Armijo backtracking).
/// `fg` evaluates the objective and writes its gradient.
struct LbfgsResult {
    VecX x;
    std::vector<double> trajectory;
    std::vector<LbfgsStep> steps;
    bool converged = false;
    bool line_search_failed = false;
    Index iterations = 0;
};

LbfgsResult lbfgs_minimize(const std::function<double(const VecX&, VecX&)>& fg, VecX x0,
                           const LbfgsConfig& cfg);

/// Full-batch L-BFGS on the contrastive loss. Dropout is never applied here:
/// the line search needs a deterministic objective.
TrainResult train_lbfgs(JointNetwork jn, const MatX& pos_s1, const MatX& pos_s2,
                        const MatX& neg_s1, const MatX& neg_s2, const TrainConfig& cfg);

/// A pair is called positive when its score is strictly below 0.75; ties go
/// to negative.
inline bool classify_positive(double score) { return score < 0.75; }

struct PairPrediction {
    VecX score;
    std::vector<bool> is_positive;
};

PairPrediction predict_pair(const JointNetwork& jn, const MatX& s1, const MatX& s2);

// Parameter-vector view over both branches (net1 first, then net2).
Index param_count(const JointNetwork& jn);
VecX pack_params(const JointNetwork& jn);
void unpack_params(JointNetwork& jn, const VecX& theta);
VecX pack_grads(const SiameseGrads& grads);

} // namespace covar
