#include "memaae/evaluation/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "memaae/error.hpp"

namespace memaae::evaluation {

namespace {

void check_lengths(const char* op, std::size_t a, std::size_t b) {
    if (a != b)
        throw Error(ErrorKind::Shape, std::string(op) + ": length mismatch " + std::to_string(a) + " vs " +
                                          std::to_string(b));
}

EvalReport report_from(const Confusion& c, double threshold) {
    EvalReport r;
    r.counts = c;
    r.best_threshold = threshold;
    r.precision = c.tp + c.fp ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    r.recall = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
    r.f1 = f1_score(r.precision, r.recall);
    return r;
}

}  // namespace

std::vector<bool> point_adjust(const std::vector<bool>& pred, const std::vector<bool>& truth) {
    check_lengths("point_adjust", pred.size(), truth.size());
    std::vector<bool> out = pred;
    std::size_t i = 0;
    while (i < truth.size()) {
        if (!truth[i]) {
            ++i;
            continue;
        }
        std::size_t end = i;
        bool hit = false;
        for (; end < truth.size() && truth[end]; ++end) hit = hit || pred[end];
        if (hit) std::fill(out.begin() + static_cast<std::ptrdiff_t>(i), out.begin() + static_cast<std::ptrdiff_t>(end), true);
        i = end;
    }
    return out;
}

Confusion confusion(const std::vector<bool>& pred, const std::vector<bool>& truth) {
    check_lengths("confusion", pred.size(), truth.size());
    Confusion c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] && truth[i])
            ++c.tp;
        else if (pred[i])
            ++c.fp;
        else if (truth[i])
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

double f1_score(double precision, double recall) {
    return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

EvalReport evaluate_at(std::span<const double> scores, const std::vector<bool>& truth, double threshold) {
    check_lengths("evaluate_at", scores.size(), truth.size());
    std::vector<bool> pred(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) pred[i] = scores[i] >= threshold;
    return report_from(confusion(point_adjust(pred, truth), truth), threshold);
}

EvalReport best_f1(std::span<const double> scores, const std::vector<bool>& truth) {
    check_lengths("best_f1", scores.size(), truth.size());
    for (double s : scores)
        if (std::isnan(s)) throw Error(ErrorKind::Argument, "best_f1: scores contain NaN");
    const std::size_t n = scores.size();
    const double inf = std::numeric_limits<double>::infinity();

    // After adjustment, a truth segment is entirely TP once the threshold drops
    // to its peak score, and entirely FN before that. Normal points are FP
    // exactly when their own score reaches the threshold. Sweeping thresholds
    // downward therefore only needs each segment's peak and length.
    struct Event {
        double score;
        std::size_t positives;  // segment length, or 0 for a normal point
    };
    std::vector<Event> events;
    std::size_t total_positive = 0;
    for (std::size_t i = 0; i < n;) {
        if (!truth[i]) {
            events.push_back({scores[i], 0});
            ++i;
            continue;
        }
        std::size_t end = i;
        double peak = -inf;
        while (end < n && truth[end]) peak = std::max(peak, scores[end++]);
        events.push_back({peak, end - i});
        total_positive += end - i;
        i = end;
    }
    std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.score > b.score; });

    Confusion c;
    c.fn = total_positive;
    c.tn = n - total_positive;
    EvalReport best = report_from(c, inf);
    if (total_positive == 0) best.warning = "no anomalies in ground truth; precision undefined, F1 reported as 0";

    // Thresholds are the distinct score values in decreasing order. Ties in F1
    // keep the earlier (larger) threshold.
    std::vector<double> distinct(scores.begin(), scores.end());
    std::sort(distinct.begin(), distinct.end(), std::greater<>());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::size_t next = 0;
    for (double threshold : distinct) {
        while (next < events.size() && events[next].score >= threshold) {
            if (events[next].positives) {
                c.tp += events[next].positives;
                c.fn -= events[next].positives;
            } else {
                ++c.fp;
                --c.tn;
            }
            ++next;
        }
        EvalReport candidate = report_from(c, threshold);
        if (candidate.f1 > best.f1) {
            candidate.warning = best.warning;
            best = candidate;
        }
    }
    return best;
}

}  // namespace memaae::evaluation
