#pragma once

#include <utility>
#include <vector>

#include "memaae/numcore/tensor.hpp"

namespace memaae::objective {

using nc::Tensor;

struct LossWeights {
    double lambda = 1.0;  // reconstruction
    double gamma1 = 2.0;  // forward prediction
    double gamma2 = 0.1;  // backward prediction

    // Throws unless all weights are finite and non-negative.
    void validate() const;
};

// Per-horizon weighting of the prediction losses. `Literal` uses (T - i) so
// the farthest step gets zero weight; `Shifted` uses (T - i + 1).
enum class DecayWeighting { Literal, Shifted };

struct LossReport {
    double rec = 0.0;
    double adv_d = 0.0;
    double adv_g = 0.0;
    double pred_fwd = 0.0;
    double pred_back = 0.0;
    double full = 0.0;
};

constexpr double kProbEpsilon = 1e-7;

// Euclidean norm of the flattened difference, averaged over the batch.
// Rank-1 inputs are a single sample; otherwise axis 0 is the batch.
Tensor loss_rec(const Tensor& x, const Tensor& reconstruction);

struct AdversarialLoss {
    Tensor discriminator;  // -(E[log D(x)] + E[log(1 - D(x_hat))])
    Tensor generator;      // -E[log D(x_hat)]
};

// Probabilities are clamped to [eps, 1 - eps] first.
AdversarialLoss loss_adv(const Tensor& real_probs, const Tensor& fake_probs);

// (1/T^2) sum_i w_i d(x_i, x~_i) with d the per-step L2 norm over variables.
// Inputs are (T, K) or (batch, T, K); the batch is averaged.
Tensor loss_pred(const Tensor& targets, const Tensor& preds, DecayWeighting weighting = DecayWeighting::Literal);
// Same formula; targets are the steps before the window, nearest first.
Tensor loss_pred_back(const Tensor& targets, const Tensor& preds,
                      DecayWeighting weighting = DecayWeighting::Literal);

// adv + lambda rec + gamma1 fwd + gamma2 back
Tensor loss_full(const Tensor& adv, const Tensor& rec, const Tensor& pred_fwd, const Tensor& pred_back,
                 const LossWeights& weights);
double loss_full(double adv, double rec, double pred_fwd, double pred_back, const LossWeights& weights);

// lambda rec + gamma1 fwd + gamma2 back for one observation.
double anomaly_score(double rec, double pred_fwd, double pred_back, const LossWeights& weights);

// Horizon weights (T - i) / T^2 (or (T - i + 1) / T^2), i = 1..T.
std::vector<double> decay_weights(std::size_t steps, DecayWeighting weighting);

}  // namespace memaae::objective
