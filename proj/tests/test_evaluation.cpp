#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include "doctest.h"
#include "memaae/data/synth.hpp"
#include "memaae/error.hpp"
#include "memaae/evaluation/metrics.hpp"
#include "memaae/evaluation/scoring.hpp"
#include "memaae/numcore/rng.hpp"
#include "support/oracles.hpp"

using namespace memaae;
using namespace memaae::evaluation;

TEST_CASE("point adjust examples") {
    std::vector<bool> truth = {false, false, false, true, true, true, false};
    std::vector<bool> pred = {false, false, false, false, true, false, false};
    CHECK(point_adjust(pred, truth) == std::vector<bool>{false, false, false, true, true, true, false});
    std::vector<bool> none(7, false);
    CHECK(point_adjust(none, truth) == none);
    std::vector<bool> outside = {true, false, false, false, false, false, true};
    CHECK(point_adjust(outside, truth) == outside);
    CHECK_THROWS_AS(point_adjust({true}, {true, false}), Error);
}

TEST_CASE("best F1 examples") {
    auto r = best_f1(std::vector<double>{0.1, 0.9, 0.2}, {false, true, false});
    CHECK(r.f1 == 1.0);
    CHECK(r.best_threshold == 0.9);
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 1.0);
    CHECK(r.counts.tp == 1);
    CHECK(r.counts.tn == 2);

    auto all = best_f1(std::vector<double>{0.3, 0.1, 0.7, 0.2}, {true, true, true, true});
    CHECK(all.recall == 1.0);
    CHECK(all.f1 == 1.0);

    auto empty = best_f1(std::vector<double>{0.3, 0.1}, {false, false});
    CHECK(empty.f1 == 0.0);
    CHECK_FALSE(empty.warning.empty());

    CHECK_THROWS_AS(best_f1(std::vector<double>{0.1, NAN}, {false, true}), Error);
    CHECK(f1_score(0.0, 0.0) == 0.0);
    CHECK(f1_score(0.5, 1.0) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("metrics match brute-force oracles on random cases") {
    nc::Rng rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng.below(200);
        auto truth = memaae::testing::random_truth(rng, n);
        std::vector<bool> pred(n);
        for (std::size_t i = 0; i < n; ++i) pred[i] = rng.uniform() < 0.2;
        auto adjusted = point_adjust(pred, truth);
        CHECK(adjusted == memaae::testing::oracle_point_adjust(pred, truth));
        CHECK(point_adjust(adjusted, truth) == adjusted);
        auto raw = confusion(pred, truth), adj = confusion(adjusted, truth);
        CHECK(adj.tp >= raw.tp);

        std::vector<double> scores(n);
        for (double& s : scores) s = std::floor(rng.uniform() * 20.0) / 20.0;  // plenty of ties
        auto fast = best_f1(scores, truth);
        auto slow = memaae::testing::oracle_best_f1(scores, truth);
        CHECK(fast.f1 == slow.f1);
        CHECK(fast.best_threshold == slow.best_threshold);
        CHECK(fast.precision == slow.precision);
        CHECK(fast.recall == slow.recall);
    }
}

TEST_CASE("best F1 depends on score order only") {
    nc::Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 100;
        auto truth = memaae::testing::random_truth(rng, n);
        std::vector<double> scores(n), transformed(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = rng.uniform();
            transformed[i] = std::exp(3.0 * scores[i]) + 10.0;
        }
        auto a = best_f1(scores, truth), b = best_f1(transformed, truth);
        CHECK(a.f1 == b.f1);
        CHECK(a.precision == b.precision);
        CHECK(a.recall == b.recall);
    }
}

TEST_CASE("an extra false alarm never raises precision") {
    nc::Rng rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 60;
        auto truth = memaae::testing::random_truth(rng, n);
        std::vector<double> scores(n);
        for (double& s : scores) s = rng.uniform();
        const double thr = 0.5;
        auto before = evaluate_at(scores, truth, thr);
        std::vector<std::size_t> normal;
        for (std::size_t i = 0; i < n; ++i)
            if (!truth[i] && scores[i] < thr) normal.push_back(i);
        if (normal.empty()) continue;
        scores[normal[rng.below(normal.size())]] = 1.0;
        auto after = evaluate_at(scores, truth, thr);
        CHECK(after.precision <= before.precision);
    }
}

namespace {

training::TrainConfig scoring_config() {
    training::TrainConfig c;
    c.model.window = 16;
    c.model.n_vars = 2;
    c.model.latent = 4;
    c.model.memory_slots = 8;
    c.model.pred_steps = 3;
    c.model.hidden = 8;
    c.model.channels = {4, 6};
    return c;
}

}  // namespace

TEST_CASE("score series layout") {
    auto c = scoring_config();
    training::ModelBundle bundle(c);
    auto test = data::synth(1, 60, 2, {{data::AnomalyKind::Point, 30, 1}});
    auto s = score_series(bundle, test, c.weights);
    CHECK(s.size() == 60 - 16 + 1);
    CHECK(s.first_index == 15);
    // no forecasting window ends before the first scored point
    CHECK(std::isnan(s.pred_fwd.front()));
    CHECK_FALSE(std::isnan(s.pred_fwd[1]));
    // the backward term exists while a later window starts after t
    CHECK(std::isnan(s.pred_back.back()));
    CHECK_FALSE(std::isnan(s.pred_back.front()));
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(std::isfinite(s.score[i]));
        CHECK(s.score[i] >= 0.0);
        double f = std::isnan(s.pred_fwd[i]) ? 0.0 : s.pred_fwd[i];
        double b = std::isnan(s.pred_back[i]) ? 0.0 : s.pred_back[i];
        CHECK(s.score[i] == objective::anomaly_score(s.rec[i], f, b, c.weights));
    }
    auto truth = aligned_truth(s, *test.labels);
    CHECK(truth.size() == s.size());
    CHECK(truth[30 - 15]);

    CHECK_THROWS_AS(score_series(bundle, data::synth(1, 10, 2, {}), c.weights), Error);
    CHECK_THROWS_AS(score_series(bundle, data::synth(1, 60, 3, {}), c.weights), Error);
}

TEST_CASE("scoring terms match a direct per-window computation") {
    auto c = scoring_config();
    training::ModelBundle bundle(c);
    auto test = data::synth(2, 40, 2, {});
    auto s = score_series(bundle, test, c.weights, {.horizon = training::ScoreHorizon::OneStep, .batch_size = 7});
    auto ds = data::window(test, c.model.window);
    nc::NoGradGuard guard;
    auto& m = bundle.model;
    auto one = [&](std::size_t i) {
        auto x = nc::Tensor::from({1, 16, 2}, std::vector<double>(ds.at(i).begin(), ds.at(i).end()));
        return m.memory_read(m.encode(x)).latent;
    };
    const std::size_t i = 3, t = i + 15;
    auto dist = [&](std::span<const double> p) {
        double acc = 0.0;
        for (std::size_t j = 0; j < 2; ++j) acc += std::pow(p[j] - test.at(t, j), 2);
        return std::sqrt(acc);
    };
    auto recon = m.decode(one(i));
    CHECK(s.rec[i] == doctest::Approx(dist(recon.values().subspan(15 * 2, 2))).epsilon(1e-12));
    auto fwd_t = m.predict_forward(one(i - 1));
    auto fwd = fwd_t.values();
    CHECK(s.pred_fwd[i] == doctest::Approx(dist(fwd.subspan(0, 2))).epsilon(1e-12));
    auto back = m.predict_backward(one(t + 1));  // window starting at t + 1
    CHECK(s.pred_back[i] == doctest::Approx(dist(back.values().subspan(0, 2))).epsilon(1e-12));

    auto full = score_series(bundle, test, c.weights, {.horizon = training::ScoreHorizon::Full});
    // horizon 2 forecast of t comes from the window ending at t - 2
    auto fwd2 = m.predict_forward(one(i - 2)), fwd3 = m.predict_forward(one(i - 3));
    double expect =
        (dist(fwd.subspan(0, 2)) + dist(fwd2.values().subspan(2, 2)) + dist(fwd3.values().subspan(4, 2))) / 3.0;
    CHECK(full.pred_fwd[i] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("scoring is independent of the batch split") {
    auto c = scoring_config();
    training::ModelBundle bundle(c);
    auto test = data::synth(3, 50, 2, {});
    auto a = score_series(bundle, test, c.weights, {.batch_size = 1});
    auto b = score_series(bundle, test, c.weights, {.batch_size = 1000});
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.score[i] == b.score[i]);
}

TEST_CASE("score csv and report") {
    ScoreSeries s;
    s.first_index = 3;
    s.score = {0.5, 1.25};
    s.rec = {0.5, 0.25};
    s.pred_fwd = {std::numeric_limits<double>::quiet_NaN(), 0.5};
    s.pred_back = {0.0, std::numeric_limits<double>::quiet_NaN()};
    auto path = std::filesystem::temp_directory_path() / "memaae_scores.csv";
    write_scores_csv(s, path);
    std::ifstream in(path);
    std::string header, l1, l2;
    std::getline(in, header);
    std::getline(in, l1);
    std::getline(in, l2);
    CHECK(header == "index,score,rec_term,pred_fwd_term,pred_back_term");
    CHECK(l1 == "3,0.5,0.5,,0");
    CHECK(l2 == "4,1.25,0.25,0.5,");
    std::filesystem::remove(path);

    EvalReport r;
    r.f1 = 0.75;
    auto text = format_report(r);
    CHECK(text.find("f1 = 0.75") != std::string::npos);
    CHECK(text.find("threshold") != std::string::npos);
}
