#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "memaae/data/series.hpp"
#include "memaae/model/memaae.hpp"
#include "memaae/numcore/adam.hpp"
#include "memaae/numcore/rng.hpp"
#include "memaae/objective/losses.hpp"
#include "memaae/training/config.hpp"

namespace memaae::training {

using nc::Tensor;

// Trained (or freshly initialized) parameters plus the record needed to use them.
struct ModelBundle {
    TrainConfig config;
    model::MemAAE model;
    std::optional<data::NormalizationStats> stats;

    explicit ModelBundle(TrainConfig cfg);
};

struct TrainingBatch {
    Tensor windows;           // (B, W, K)
    Tensor forward_targets;   // (B, T, K): x[t+1..t+T]
    Tensor backward_targets;  // (B, T, K): x[s-1], x[s-2], ..., x[s-T] for window start s
    std::vector<std::size_t> end_index;
};

// End indices t of windows with T successors and T predecessors inside the
// series. With `need_targets` false every window is eligible.
std::vector<std::size_t> eligible_windows(const data::WindowedDataset& dataset, std::size_t steps,
                                          bool need_targets = true);

// Row t of the series a stride-1 windowed dataset was built from.
std::span<const double> series_row(const data::WindowedDataset& dataset, std::size_t t);

// Uniform draw (with replacement) of `config.batch_size` eligible windows.
TrainingBatch sample_batch(const data::WindowedDataset& dataset, const TrainConfig& config, nc::Rng& rng);
// Batch assembled from explicit window end indices.
TrainingBatch make_batch(const data::WindowedDataset& dataset, std::size_t steps,
                         const std::vector<std::size_t>& end_index, bool with_targets = true);

struct EpochLog {
    objective::LossReport mean;
    double seconds = 0.0;
};

struct TrainLog {
    std::uint64_t seed = 0;
    std::vector<EpochLog> epochs;
};

// Alternating discriminator / autoencoder updates over one bundle.
class Trainer {
public:
    Trainer(ModelBundle& bundle);

    // Autoencoder-side forward pass kept alive for the generator step.
    struct Forward {
        Tensor latent;
        Tensor reconstruction;
        Tensor pred_forward;
        Tensor pred_backward;
    };

    Forward forward(const TrainingBatch& batch) const;
    // Updates the discriminator only; returns its loss.
    double discriminator_step(const TrainingBatch& batch, const Tensor& reconstruction);
    // Updates encoder, decoder, memory and predictors on the full objective.
    objective::LossReport generator_step(const TrainingBatch& batch, const Forward& fwd);
    // One discriminator step then one generator step.
    objective::LossReport step(const TrainingBatch& batch);

    const nc::Adam& discriminator_optimizer() const { return disc_opt_; }
    const nc::Adam& generator_optimizer() const { return gen_opt_; }

private:
    ModelBundle& bundle_;
    std::vector<Tensor> disc_params_;
    std::vector<Tensor> gen_params_;
    nc::Adam disc_opt_;
    nc::Adam gen_opt_;
};

using EpochCallback = std::function<void(std::size_t epoch, const EpochLog&)>;

// Trains a fresh bundle (initialized from `config.seed`) on normalized windows.
std::pair<ModelBundle, TrainLog> train(const data::WindowedDataset& dataset, const TrainConfig& config,
                                       const EpochCallback& on_epoch = {});

void save_checkpoint(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_checkpoint(const std::filesystem::path& path);
// Loads parameters into an existing bundle, checking every block's shape.
void load_parameters(ModelBundle& bundle, const std::filesystem::path& path);

std::string serialize_checkpoint(const ModelBundle& bundle);
ModelBundle deserialize_checkpoint(const std::string& bytes, const std::string& source = "<memory>");

}  // namespace memaae::training
