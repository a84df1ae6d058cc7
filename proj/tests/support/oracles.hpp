#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "memaae/evaluation/metrics.hpp"
#include "memaae/numcore/rng.hpp"

// Deliberately naive reference implementations for the metric code.
namespace memaae::testing {

// Runs of anomalies of random length separated by random gaps.
inline std::vector<bool> random_truth(nc::Rng& rng, std::size_t n) {
    std::vector<bool> truth(n, false);
    const double rate = rng.uniform() * 0.3;
    for (std::size_t i = 0; i < n;) {
        if (rng.uniform() < rate) {
            std::size_t len = 1 + rng.below(8);
            for (std::size_t j = i; j < std::min(n, i + len); ++j) truth[j] = true;
            i += len + 1;
        } else {
            ++i;
        }
    }
    return truth;
}

// For each index, scan left and right to find its segment and check whether
// any prediction inside it is set.
inline std::vector<bool> oracle_point_adjust(const std::vector<bool>& pred, const std::vector<bool>& truth) {
    const std::size_t n = truth.size();
    std::vector<bool> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!truth[i]) {
            out[i] = pred[i];
            continue;
        }
        std::size_t lo = i, hi = i;
        while (lo > 0 && truth[lo - 1]) --lo;
        while (hi + 1 < n && truth[hi + 1]) ++hi;
        bool hit = false;
        for (std::size_t j = lo; j <= hi; ++j) hit = hit || pred[j];
        out[i] = hit;
    }
    return out;
}

struct OracleResult {
    double f1 = 0.0, precision = 0.0, recall = 0.0, best_threshold = 0.0;
};

// Tries every candidate threshold, largest first, keeping the first maximum.
inline OracleResult oracle_best_f1(const std::vector<double>& scores, const std::vector<bool>& truth) {
    std::vector<double> candidates = scores;
    candidates.push_back(std::numeric_limits<double>::infinity());
    std::sort(candidates.begin(), candidates.end(), std::greater<>());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    OracleResult best;
    bool first = true;
    for (double thr : candidates) {
        std::vector<bool> pred(scores.size());
        for (std::size_t i = 0; i < scores.size(); ++i) pred[i] = scores[i] >= thr;
        auto adj = oracle_point_adjust(pred, truth);
        double tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (adj[i] && truth[i]) ++tp;
            if (adj[i] && !truth[i]) ++fp;
            if (!adj[i] && truth[i]) ++fn;
        }
        double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
        double r = tp + fn > 0 ? tp / (tp + fn) : 0.0;
        double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
        if (first || f > best.f1) best = {f, p, r, thr};
        first = false;
    }
    return best;
}

}  // namespace memaae::testing
