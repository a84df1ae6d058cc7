#pragma once

#include <filesystem>
#include <vector>

#include "memaae/data/series.hpp"
#include "memaae/evaluation/metrics.hpp"
#include "memaae/objective/losses.hpp"
#include "memaae/training/trainer.hpp"

namespace memaae::evaluation {

// Per-point scores for timestamps first_index .. first_index + size() - 1
// (first_index = W - 1; earlier points have no score). A term that cannot be
// computed at a point (no forecasting window reaches it) is NaN and left out
// of that point's score.
struct ScoreSeries {
    std::size_t first_index = 0;
    std::vector<double> score;
    std::vector<double> rec;
    std::vector<double> pred_fwd;
    std::vector<double> pred_back;

    std::size_t size() const { return score.size(); }
};

struct ScoreOptions {
    training::ScoreHorizon horizon = training::ScoreHorizon::OneStep;
    std::size_t batch_size = 256;
};

// Scores an already normalized test series.
ScoreSeries score_series(const training::ModelBundle& bundle, const data::RawSeries& normalized_test,
                         const objective::LossWeights& weights, const ScoreOptions& options = {});

// Normalizes with the bundle's stored stats (when present), then scores with
// the bundle's weights and horizon.
ScoreSeries score_raw(const training::ModelBundle& bundle, const data::RawSeries& test);

// Ground-truth labels aligned to the scored region.
std::vector<bool> aligned_truth(const ScoreSeries& scores, const std::vector<bool>& labels);

EvalReport evaluate(const ScoreSeries& scores, const std::vector<bool>& labels);

// CSV columns: index,score,rec_term,pred_fwd_term,pred_back_term (empty cell = undefined).
void write_scores_csv(const ScoreSeries& scores, const std::filesystem::path& path);
std::string format_report(const EvalReport& report);

}  // namespace memaae::evaluation
