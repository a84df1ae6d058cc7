#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace memaae::evaluation {

struct Confusion {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct EvalReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double best_threshold = 0.0;  // +inf when nothing is flagged
    Confusion counts;
    std::string warning;
};

// Every maximal run of true labels becomes fully predicted as soon as one of
// its points is predicted. Predictions outside runs are left untouched.
std::vector<bool> point_adjust(const std::vector<bool>& pred, const std::vector<bool>& truth);

Confusion confusion(const std::vector<bool>& pred, const std::vector<bool>& truth);

// 2PR / (P + R), or 0 when P + R == 0.
double f1_score(double precision, double recall);

// Report for the prediction `score >= threshold` after point adjustment.
EvalReport evaluate_at(std::span<const double> scores, const std::vector<bool>& truth, double threshold);

// Best point-adjusted F1 over every observed score (and +inf) as threshold.
// Ties keep the largest threshold. All-false truth yields F1 = 0 and a warning.
EvalReport best_f1(std::span<const double> scores, const std::vector<bool>& truth);

}  // namespace memaae::evaluation
