#include "memaae/evaluation/scoring.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "memaae/error.hpp"

namespace memaae::evaluation {

using nc::Tensor;

namespace {

double distance(std::span<const double> a, std::span<const double> b) {
    double total = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) total += (a[j] - b[j]) * (a[j] - b[j]);
    return std::sqrt(total);
}

}  // namespace

ScoreSeries score_series(const training::ModelBundle& bundle, const data::RawSeries& test,
                         const objective::LossWeights& weights, const ScoreOptions& options) {
    const auto& cfg = bundle.model.config();
    const std::size_t W = cfg.window, K = cfg.n_vars, T = cfg.pred_steps;
    test.validate();
    if (test.k != K)
        throw Error(ErrorKind::Shape, "test series has " + std::to_string(test.k) + " variables, model expects " +
                                          std::to_string(K));
    if (test.n < W)
        throw Error(ErrorKind::Argument, "test series of length " + std::to_string(test.n) +
                                             " is shorter than the window " + std::to_string(W));
    const auto windows = data::window(test, W);
    const std::size_t count = windows.count;
    const bool predict = !cfg.no_prediction;

    std::vector<double> last_rows(count * K);
    std::vector<double> fwd_preds(predict ? count * T * K : 0);
    std::vector<double> back_preds(predict ? count * T * K : 0);

    nc::NoGradGuard no_grad;
    const std::size_t chunk = std::max<std::size_t>(1, options.batch_size);
    for (std::size_t first = 0; first < count; first += chunk) {
        const std::size_t B = std::min(chunk, count - first);
        std::vector<double> block(windows.windows.begin() + static_cast<std::ptrdiff_t>(first * W * K),
                                  windows.windows.begin() + static_cast<std::ptrdiff_t>((first + B) * W * K));
        Tensor x = Tensor::from({B, W, K}, std::move(block));
        Tensor latent = bundle.model.memory_read(bundle.model.encode(x)).latent;
        Tensor recon = bundle.model.decode(latent);
        auto rv = recon.values();
        for (std::size_t b = 0; b < B; ++b)
            std::copy_n(rv.begin() + static_cast<std::ptrdiff_t>((b * W + W - 1) * K), K,
                        last_rows.begin() + static_cast<std::ptrdiff_t>((first + b) * K));
        if (predict) {
            Tensor fwd = bundle.model.predict_forward(latent), back = bundle.model.predict_backward(latent);
            auto fv = fwd.values(), bv = back.values();
            std::copy(fv.begin(), fv.end(), fwd_preds.begin() + static_cast<std::ptrdiff_t>(first * T * K));
            std::copy(bv.begin(), bv.end(), back_preds.begin() + static_cast<std::ptrdiff_t>(first * T * K));
        }
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    ScoreSeries out;
    out.first_index = W - 1;
    out.score.resize(count);
    out.rec.resize(count);
    out.pred_fwd.assign(count, nan);
    out.pred_back.assign(count, nan);
    const std::size_t horizon = options.horizon == training::ScoreHorizon::Full ? T : 1;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t t = i + W - 1;
        auto x = test.row(t);
        out.rec[i] = distance(x, {last_rows.data() + i * K, K});
        if (predict) {
            // forecast of step h made by the window that ends h points before t
            double sum = 0.0;
            std::size_t used = 0;
            for (std::size_t h = 1; h <= horizon && h <= i; ++h) {
                sum += distance(x, {fwd_preds.data() + ((i - h) * T + (h - 1)) * K, K});
                ++used;
            }
            if (used) out.pred_fwd[i] = sum / static_cast<double>(used);
            // backcast of step h made by the window that starts h points after t
            sum = 0.0;
            used = 0;
            for (std::size_t h = 1; h <= horizon && t + h < count; ++h) {
                sum += distance(x, {back_preds.data() + ((t + h) * T + (h - 1)) * K, K});
                ++used;
            }
            if (used) out.pred_back[i] = sum / static_cast<double>(used);
        }
        auto term = [](double v) { return std::isnan(v) ? 0.0 : v; };
        out.score[i] = objective::anomaly_score(out.rec[i], term(out.pred_fwd[i]), term(out.pred_back[i]), weights);
    }
    return out;
}

ScoreSeries score_raw(const training::ModelBundle& bundle, const data::RawSeries& test) {
    data::RawSeries normalized = bundle.stats ? data::apply_normalize(test, *bundle.stats) : test;
    return score_series(bundle, normalized, bundle.config.weights, {.horizon = bundle.config.score_horizon});
}

std::vector<bool> aligned_truth(const ScoreSeries& scores, const std::vector<bool>& labels) {
    if (labels.size() != scores.first_index + scores.size())
        throw Error(ErrorKind::Shape, "labels cover " + std::to_string(labels.size()) + " points, scores cover " +
                                          std::to_string(scores.first_index + scores.size()));
    return {labels.begin() + static_cast<std::ptrdiff_t>(scores.first_index), labels.end()};
}

EvalReport evaluate(const ScoreSeries& scores, const std::vector<bool>& labels) {
    return best_f1(scores.score, aligned_truth(scores, labels));
}

void write_scores_csv(const ScoreSeries& scores, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << "index,score,rec_term,pred_fwd_term,pred_back_term\n" << std::setprecision(17);
    auto cell = [&out](double v) {
        if (!std::isnan(v)) out << v;
    };
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out << scores.first_index + i << ',';
        cell(scores.score[i]);
        out << ',';
        cell(scores.rec[i]);
        out << ',';
        cell(scores.pred_fwd[i]);
        out << ',';
        cell(scores.pred_back[i]);
        out << '\n';
    }
    if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

std::string format_report(const EvalReport& r) {
    std::ostringstream out;
    out << std::setprecision(10);
    out << "precision = " << r.precision << '\n'
        << "recall = " << r.recall << '\n'
        << "f1 = " << r.f1 << '\n'
        << "threshold = " << r.best_threshold << '\n'
        << "tp = " << r.counts.tp << '\n'
        << "fp = " << r.counts.fp << '\n'
        << "fn = " << r.counts.fn << '\n'
        << "tn = " << r.counts.tn << '\n';
    if (!r.warning.empty()) out << "warning = " << r.warning << '\n';
    return out.str();
}

}  // namespace memaae::evaluation
