#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "memaae/model/memaae.hpp"
#include "memaae/objective/losses.hpp"

namespace memaae::training {

// How many forecasts contribute to a point's prediction error at scoring time.
enum class ScoreHorizon { OneStep, Full };

// Everything needed to reproduce a run. Defaults follow the reference
// settings (window 32, latent 16, memory 512, pred step 7, weights 1.0 / 2.0 /
// 0.1, Adam at 1e-3, 150 epochs of 512 batches).
struct TrainConfig {
    model::ModelConfig model;
    objective::LossWeights weights;
    objective::DecayWeighting decay = objective::DecayWeighting::Literal;
    ScoreHorizon score_horizon = ScoreHorizon::OneStep;
    double learning_rate = 1e-3;
    std::size_t epochs = 150;
    std::size_t batches_per_epoch = 512;
    std::size_t batch_size = 64;
    std::uint64_t seed = 0;
    double clip_norm = 5.0;  // <= 0 disables clipping

    void validate() const;

    // Canonical key/value listing, in a fixed order.
    std::vector<std::pair<std::string, std::string>> to_kv() const;
    // Applies one key; throws a config error naming unknown keys or bad values.
    void set(const std::string& key, const std::string& value);
};

// `key = value` lines, `#` comments. Keys are case-insensitive and spaces may
// stand in for underscores, so "Window size = 32" and "window_size = 32" are
// the same setting.
TrainConfig parse_config(const std::string& text, TrainConfig base = {});
TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = {});
std::string format_config(const TrainConfig& config);

// Lower-cased, underscore-separated form of a config key.
std::string canonical_key(const std::string& key);

}  // namespace memaae::training
