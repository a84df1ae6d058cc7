#include "memaae/objective/losses.hpp"

#include <cmath>

#include "memaae/error.hpp"

namespace memaae::objective {

using namespace memaae::nc;

void LossWeights::validate() const {
    for (double w : {lambda, gamma1, gamma2})
        if (!std::isfinite(w) || w < 0.0)
            throw Error(ErrorKind::Config, "loss weights must be finite and >= 0");
}

Tensor loss_rec(const Tensor& x, const Tensor& reconstruction) {
    if (x.shape() != reconstruction.shape())
        throw Error(ErrorKind::Shape, "loss_rec: shapes " + shape_str(x.shape()) + " and " +
                                          shape_str(reconstruction.shape()) + " differ");
    std::size_t batch = x.rank() == 1 ? 1 : x.dim(0);
    Tensor diff = reshape(sub(x, reconstruction), {batch, x.size() / batch});
    return mean(sqrt(sum(mul(diff, diff), 1)));
}

AdversarialLoss loss_adv(const Tensor& real_probs, const Tensor& fake_probs) {
    constexpr double lo = kProbEpsilon, hi = 1.0 - kProbEpsilon;
    Tensor real = clamp(real_probs, lo, hi);
    Tensor fake = clamp(fake_probs, lo, hi);
    Tensor one = Tensor::scalar(1.0);
    Tensor objective = add(mean(log(real)), mean(log(sub(one, fake))));
    return {scale(objective, -1.0), scale(mean(log(fake)), -1.0)};
}

std::vector<double> decay_weights(std::size_t steps, DecayWeighting weighting) {
    std::vector<double> w(steps);
    const double t = static_cast<double>(steps);
    for (std::size_t i = 1; i <= steps; ++i) {
        double numerator = t - static_cast<double>(i) + (weighting == DecayWeighting::Shifted ? 1.0 : 0.0);
        w[i - 1] = numerator / (t * t);
    }
    return w;
}

namespace {

Tensor weighted_step_loss(const char* name, const Tensor& targets, const Tensor& preds, DecayWeighting weighting) {
    if (targets.shape() != preds.shape() || (targets.rank() != 2 && targets.rank() != 3))
        throw Error(ErrorKind::Shape, std::string(name) + ": expected matching (T, K) or (batch, T, K), got " +
                                          shape_str(targets.shape()) + " and " + shape_str(preds.shape()));
    Tensor t = targets.rank() == 2 ? reshape(targets, {1, targets.dim(0), targets.dim(1)}) : targets;
    Tensor p = preds.rank() == 2 ? reshape(preds, {1, preds.dim(0), preds.dim(1)}) : preds;
    const std::size_t steps = t.dim(1);
    Tensor diff = sub(t, p);
    Tensor dist = sqrt(sum(mul(diff, diff), 2));  // (batch, T)
    Tensor w = Tensor::from({steps}, decay_weights(steps, weighting));
    return mean(sum(mul(dist, w), 1));
}

}  // namespace

Tensor loss_pred(const Tensor& targets, const Tensor& preds, DecayWeighting weighting) {
    return weighted_step_loss("loss_pred", targets, preds, weighting);
}

Tensor loss_pred_back(const Tensor& targets, const Tensor& preds, DecayWeighting weighting) {
    return weighted_step_loss("loss_pred_back", targets, preds, weighting);
}

Tensor loss_full(const Tensor& adv, const Tensor& rec, const Tensor& pred_fwd, const Tensor& pred_back,
                 const LossWeights& weights) {
    Tensor total = add(adv, scale(rec, weights.lambda));
    if (pred_fwd.defined()) total = add(total, scale(pred_fwd, weights.gamma1));
    if (pred_back.defined()) total = add(total, scale(pred_back, weights.gamma2));
    return total;
}

double loss_full(double adv, double rec, double pred_fwd, double pred_back, const LossWeights& weights) {
    return adv + weights.lambda * rec + weights.gamma1 * pred_fwd + weights.gamma2 * pred_back;
}

double anomaly_score(double rec, double pred_fwd, double pred_back, const LossWeights& weights) {
    return weights.lambda * rec + weights.gamma1 * pred_fwd + weights.gamma2 * pred_back;
}

}  // namespace memaae::objective
