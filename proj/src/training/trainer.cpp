#include "memaae/training/trainer.hpp"

#include <chrono>
#include <cmath>

#include "memaae/error.hpp"

namespace memaae::training {

using namespace memaae::nc;

ModelBundle::ModelBundle(TrainConfig cfg) : config(std::move(cfg)), model(config.model, config.seed) {}

std::vector<std::size_t> eligible_windows(const data::WindowedDataset& dataset, std::size_t steps,
                                          bool need_targets) {
    const std::size_t W = dataset.window;
    const std::size_t N = dataset.count + W - 1;
    std::vector<std::size_t> out;
    if (!need_targets) return dataset.end_index;
    // t - W + 1 - T >= 0 and t + T <= N - 1
    if (W - 1 + 2 * steps > N - 1) return out;
    for (std::size_t t = W - 1 + steps; t + steps <= N - 1; ++t) out.push_back(t);
    return out;
}

std::span<const double> series_row(const data::WindowedDataset& dataset, std::size_t t) {
    const std::size_t k = dataset.k;
    if (t < dataset.count) return dataset.at(t).subspan(0, k);
    std::size_t last = dataset.count - 1;
    std::size_t offset = t - last;
    if (offset >= dataset.window) throw Error(ErrorKind::Argument, "series_row: index past the series end");
    return dataset.at(last).subspan(offset * k, k);
}

TrainingBatch make_batch(const data::WindowedDataset& dataset, std::size_t steps,
                         const std::vector<std::size_t>& end_index, bool with_targets) {
    const std::size_t W = dataset.window, K = dataset.k, B = end_index.size();
    if (B == 0) throw Error(ErrorKind::Argument, "empty batch");
    std::vector<double> windows;
    std::vector<double> fwd, back;
    windows.reserve(B * W * K);
    for (std::size_t t : end_index) {
        if (t + 1 < W || t - (W - 1) >= dataset.count)
            throw Error(ErrorKind::Argument, "window end index " + std::to_string(t) + " out of range");
        auto w = dataset.at(t - (W - 1));
        windows.insert(windows.end(), w.begin(), w.end());
        if (!with_targets) continue;
        const std::size_t start = t - (W - 1);
        if (start < steps) throw Error(ErrorKind::Argument, "window lacks backward targets");
        for (std::size_t i = 1; i <= steps; ++i) {
            auto r = series_row(dataset, t + i);
            fwd.insert(fwd.end(), r.begin(), r.end());
        }
        for (std::size_t i = 1; i <= steps; ++i) {
            auto r = series_row(dataset, start - i);
            back.insert(back.end(), r.begin(), r.end());
        }
    }
    TrainingBatch batch;
    batch.windows = Tensor::from({B, W, K}, std::move(windows));
    if (with_targets) {
        batch.forward_targets = Tensor::from({B, steps, K}, std::move(fwd));
        batch.backward_targets = Tensor::from({B, steps, K}, std::move(back));
    }
    batch.end_index = end_index;
    return batch;
}

TrainingBatch sample_batch(const data::WindowedDataset& dataset, const TrainConfig& config, Rng& rng) {
    const bool targets = !config.model.no_prediction;
    auto eligible = eligible_windows(dataset, config.model.pred_steps, targets);
    if (eligible.empty())
        throw Error(ErrorKind::Config, "series too short: no window has " + std::to_string(config.model.pred_steps) +
                                           " steps of context on both sides");
    std::vector<std::size_t> picks(config.batch_size);
    for (auto& p : picks) p = eligible[rng.below(eligible.size())];
    return make_batch(dataset, config.model.pred_steps, picks, targets);
}

// --- Trainer ----------------------------------------------------------------

Trainer::Trainer(ModelBundle& bundle)
    : bundle_(bundle),
      disc_params_(bundle.model.discriminator_params()),
      gen_params_(bundle.model.generator_params()),
      disc_opt_(disc_params_, {.learning_rate = bundle.config.learning_rate}),
      gen_opt_(gen_params_, {.learning_rate = bundle.config.learning_rate}) {}

Trainer::Forward Trainer::forward(const TrainingBatch& batch) const {
    const auto& m = bundle_.model;
    Forward out;
    Tensor z = m.encode(batch.windows);
    out.latent = m.memory_read(z).latent;
    out.reconstruction = m.decode(out.latent);
    if (!m.config().no_prediction) {
        out.pred_forward = m.predict_forward(out.latent);
        out.pred_backward = m.predict_backward(out.latent);
    }
    return out;
}

double Trainer::discriminator_step(const TrainingBatch& batch, const Tensor& reconstruction) {
    const auto& m = bundle_.model;
    auto adv = objective::loss_adv(m.discriminate(batch.windows), m.discriminate(reconstruction.detach()));
    backward(adv.discriminator);
    clip_grad_norm(disc_params_, bundle_.config.clip_norm);
    disc_opt_.step();
    return adv.discriminator.item();
}

objective::LossReport Trainer::generator_step(const TrainingBatch& batch, const Forward& fwd) {
    const auto& m = bundle_.model;
    const auto& cfg = bundle_.config;
    objective::LossReport report;
    Tensor real_probs;
    {
        // only the fake branch feeds the generator objective
        nc::NoGradGuard no_grad;
        real_probs = m.discriminate(batch.windows);
    }
    auto adv = objective::loss_adv(real_probs, m.discriminate(fwd.reconstruction));
    Tensor rec = objective::loss_rec(batch.windows, fwd.reconstruction);
    Tensor pred_fwd, pred_back;
    if (!m.config().no_prediction) {
        pred_fwd = objective::loss_pred(batch.forward_targets, fwd.pred_forward, cfg.decay);
        pred_back = objective::loss_pred_back(batch.backward_targets, fwd.pred_backward, cfg.decay);
        report.pred_fwd = pred_fwd.item();
        report.pred_back = pred_back.item();
    }
    Tensor full = objective::loss_full(adv.generator, rec, pred_fwd, pred_back, cfg.weights);
    report.adv_g = adv.generator.item();
    report.rec = rec.item();
    report.full = full.item();
    if (!std::isfinite(report.full)) return report;
    backward(full);
    // The generator loss reaches the discriminator too; those grads are discarded.
    zero_grads(disc_params_);
    clip_grad_norm(gen_params_, cfg.clip_norm);
    gen_opt_.step();
    return report;
}

objective::LossReport Trainer::step(const TrainingBatch& batch) {
    Forward fwd = forward(batch);
    double d_loss = discriminator_step(batch, fwd.reconstruction);
    auto report = generator_step(batch, fwd);
    report.adv_d = d_loss;
    return report;
}

std::pair<ModelBundle, TrainLog> train(const data::WindowedDataset& dataset, const TrainConfig& config,
                                       const EpochCallback& on_epoch) {
    config.validate();
    if (dataset.k != config.model.n_vars)
        throw Error(ErrorKind::Config, "data has " + std::to_string(dataset.k) + " variables, config expects " +
                                           std::to_string(config.model.n_vars));
    if (dataset.window != config.model.window)
        throw Error(ErrorKind::Config, "dataset window " + std::to_string(dataset.window) +
                                           " differs from configured window_size " +
                                           std::to_string(config.model.window));
    ModelBundle bundle(config);
    TrainLog log;
    log.seed = config.seed;
    if (config.epochs == 0) return {std::move(bundle), std::move(log)};

    // Sampling stream is independent of the initialization stream.
    Rng rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
    Trainer trainer(bundle);
    // Fail before the first step rather than mid-epoch.
    if (eligible_windows(dataset, config.model.pred_steps, !config.model.no_prediction).empty())
        throw Error(ErrorKind::Config, "series too short for window_size + 2 x pred_step");

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        auto started = std::chrono::steady_clock::now();
        EpochLog entry;
        for (std::size_t b = 0; b < config.batches_per_epoch; ++b) {
            auto batch = sample_batch(dataset, config, rng);
            auto r = trainer.step(batch);
            for (double v : {r.rec, r.adv_d, r.adv_g, r.pred_fwd, r.pred_back, r.full})
                if (!std::isfinite(v))
                    throw Error(ErrorKind::Numeric, "non-finite loss at epoch " + std::to_string(epoch + 1) +
                                                        ", batch " + std::to_string(b + 1));
            entry.mean.rec += r.rec;
            entry.mean.adv_d += r.adv_d;
            entry.mean.adv_g += r.adv_g;
            entry.mean.pred_fwd += r.pred_fwd;
            entry.mean.pred_back += r.pred_back;
            entry.mean.full += r.full;
        }
        const double n = static_cast<double>(config.batches_per_epoch);
        for (double* v : {&entry.mean.rec, &entry.mean.adv_d, &entry.mean.adv_g, &entry.mean.pred_fwd,
                          &entry.mean.pred_back, &entry.mean.full})
            *v /= n;
        entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        log.epochs.push_back(entry);
        if (on_epoch) on_epoch(epoch + 1, entry);
    }
    return {std::move(bundle), std::move(log)};
}

}  // namespace memaae::training
