#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "memaae/data/series.hpp"
#include "memaae/data/synth.hpp"
#include "memaae/error.hpp"
#include "memaae/training/config.hpp"
#include "memaae/training/trainer.hpp"

using namespace memaae;
using namespace memaae::training;

namespace {

TrainConfig tiny_config() {
    TrainConfig c;
    c.model.window = 16;
    c.model.n_vars = 2;
    c.model.latent = 4;
    c.model.memory_slots = 8;
    c.model.pred_steps = 3;
    c.model.hidden = 8;
    c.model.channels = {4, 6};
    c.epochs = 2;
    c.batches_per_epoch = 3;
    c.batch_size = 4;
    c.seed = 17;
    return c;
}

data::WindowedDataset ramp_dataset(std::size_t n, std::size_t k, std::size_t w) {
    data::RawSeries s;
    s.n = n;
    s.k = k;
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t j = 0; j < k; ++j) s.values.push_back(static_cast<double>(t) + 0.001 * static_cast<double>(j));
    return data::window(s, w);
}

data::WindowedDataset synth_dataset(const TrainConfig& c, std::size_t n = 200) {
    auto s = data::synth(3, n, c.model.n_vars, {});
    return data::window(data::apply_normalize(s, data::fit_normalize(s)), c.model.window);
}

std::vector<std::vector<double>> snapshot(const std::vector<nc::Tensor>& params) {
    std::vector<std::vector<double>> out;
    for (const auto& p : params) out.emplace_back(p.values().begin(), p.values().end());
    return out;
}

}  // namespace

TEST_CASE("eligible windows need both target ranges") {
    auto ds = ramp_dataset(100, 1, 32);
    auto ends = eligible_windows(ds, 7);
    REQUIRE(ends.size() == 55);
    CHECK(ends.front() == 38);
    CHECK(ends.back() == 92);
    CHECK(eligible_windows(ds, 7, false).size() == 69);
    CHECK(eligible_windows(ramp_dataset(40, 1, 32), 7).empty());
}

TEST_CASE("batch targets are the neighbours of each window") {
    auto ds = ramp_dataset(100, 2, 32);
    auto batch = make_batch(ds, 3, {40, 70});
    CHECK(batch.windows.shape() == nc::Shape{2, 32, 2});
    // window ending at 40 starts at 9
    CHECK(batch.windows.at({0, 0, 0}) == 9.0);
    CHECK(batch.windows.at({0, 31, 0}) == 40.0);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(batch.forward_targets.at({0, i, 0}) == 41.0 + static_cast<double>(i));
        CHECK(batch.backward_targets.at({0, i, 0}) == 8.0 - static_cast<double>(i));
        CHECK(batch.forward_targets.at({1, i, 1}) == doctest::Approx(71.001 + static_cast<double>(i)));
    }
    CHECK(series_row(ds, 50)[0] == 50.0);
}

TEST_CASE("sampling is seeded and uniform over eligible windows") {
    auto c = tiny_config();
    auto ds = synth_dataset(c);
    nc::Rng a(5), b(5);
    auto allowed = eligible_windows(ds, c.model.pred_steps);
    for (int i = 0; i < 10; ++i) {
        auto ba = sample_batch(ds, c, a), bb = sample_batch(ds, c, b);
        CHECK(ba.end_index == bb.end_index);
        for (auto t : ba.end_index) CHECK(std::find(allowed.begin(), allowed.end(), t) != allowed.end());
    }
    // every eligible window shows up under many draws
    std::vector<int> hits(ds.count + c.model.window, 0);
    nc::Rng r(1);
    for (int i = 0; i < 2000; ++i)
        for (auto t : sample_batch(ds, c, r).end_index) ++hits[t];
    for (auto t : allowed) CHECK(hits[t] > 0);
}

TEST_CASE("config") {
    SUBCASE("keys follow the table names") {
        auto c = parse_config(
            "# settings\nWindow size = 16\nlatent size = 4\nMemory-size = 8\npred step = 3\n"
            "reconstruction weight = 1.5\nforward prediction weight = 2\nbackward_prediction_weight = 0.2\n");
        CHECK(c.model.window == 16);
        CHECK(c.model.latent == 4);
        CHECK(c.model.memory_slots == 8);
        CHECK(c.model.pred_steps == 3);
        CHECK(c.weights.lambda == 1.5);
        CHECK(c.weights.gamma2 == 0.2);
    }
    SUBCASE("round trip through text") {
        auto c = tiny_config();
        c.decay = objective::DecayWeighting::Shifted;
        c.score_horizon = ScoreHorizon::Full;
        c.model.no_memory = true;
        c.learning_rate = 3e-4;
        auto back = parse_config(format_config(c));
        CHECK(back.to_kv() == c.to_kv());
    }
    SUBCASE("errors name the key") {
        try {
            parse_config("window_sise = 4\n");
            FAIL("expected a config error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Config);
            CHECK(std::string(e.what()).find("window_sise") != std::string::npos);
        }
        CHECK_THROWS_AS(parse_config("epochs = many\n"), Error);
        CHECK_THROWS_AS(parse_config("window_size\n"), Error);
        CHECK_THROWS_AS(parse_config("pred_step = 0\n"), Error);
        CHECK_THROWS_AS(parse_config("no_memory = maybe\n"), Error);
        CHECK_THROWS_AS(parse_config("learning_rate = -1\n"), Error);
    }
}

TEST_CASE("zero epochs returns the initialization") {
    auto c = tiny_config();
    c.epochs = 0;
    auto ds = synth_dataset(c);
    auto [bundle, log] = train(ds, c);
    CHECK(log.epochs.empty());
    ModelBundle fresh(c);
    for (std::size_t i = 0; i < bundle.model.parameters().size(); ++i) {
        auto a = bundle.model.parameters()[i].tensor.values();
        auto b = fresh.model.parameters()[i].tensor.values();
        CHECK(std::equal(a.begin(), a.end(), b.begin()));
    }
}

TEST_CASE("training is deterministic and logs every epoch") {
    auto c = tiny_config();
    auto ds = synth_dataset(c);
    auto [a, log_a] = train(ds, c);
    auto [b, log_b] = train(ds, c);
    CHECK(log_a.epochs.size() == c.epochs);
    CHECK(log_a.seed == c.seed);
    CHECK(serialize_checkpoint(a) == serialize_checkpoint(b));
    c.seed += 1;
    auto [other, log_o] = train(ds, c);
    CHECK(serialize_checkpoint(other) != serialize_checkpoint(a));
}

TEST_CASE("each step touches only its own parameter group") {
    auto c = tiny_config();
    auto ds = synth_dataset(c);
    ModelBundle bundle(c);
    Trainer trainer(bundle);
    nc::Rng rng(1);
    auto batch = sample_batch(ds, c, rng);
    auto fwd = trainer.forward(batch);

    auto gen = bundle.model.generator_params();
    auto disc = bundle.model.discriminator_params();
    auto gen_before = snapshot(gen), disc_before = snapshot(disc);
    trainer.discriminator_step(batch, fwd.reconstruction);
    CHECK(snapshot(gen) == gen_before);
    CHECK(snapshot(disc) != disc_before);

    auto disc_mid = snapshot(disc);
    trainer.generator_step(batch, fwd);
    CHECK(snapshot(disc) == disc_mid);
    CHECK(snapshot(gen) != gen_before);
    for (auto& p : disc) CHECK_FALSE(p.has_grad());
    for (auto& p : gen) CHECK_FALSE(p.has_grad());
}

TEST_CASE("ablations") {
    auto c = tiny_config();
    c.model.no_memory = true;
    c.model.no_prediction = true;
    auto ds = synth_dataset(c);
    ModelBundle bundle(c);
    Trainer trainer(bundle);
    nc::Rng rng(2);
    auto batch = sample_batch(ds, c, rng);
    auto memory_before = snapshot(bundle.model.memory_params());
    auto pred_before = snapshot(bundle.model.forward_predictor_params());
    auto report = trainer.step(batch);
    // plain adversarial autoencoder: L_adv + lambda L_rec
    CHECK(report.pred_fwd == 0.0);
    CHECK(report.pred_back == 0.0);
    CHECK(report.full == doctest::Approx(report.adv_g + c.weights.lambda * report.rec).epsilon(1e-12));
    CHECK(snapshot(bundle.model.memory_params()) == memory_before);
    CHECK(snapshot(bundle.model.forward_predictor_params()) == pred_before);
}

TEST_CASE("training input checks") {
    auto c = tiny_config();
    auto ds = synth_dataset(c);
    auto wrong = c;
    wrong.model.n_vars = 3;
    CHECK_THROWS_AS(train(ds, wrong), Error);
    auto short_ds = synth_dataset(c, 20);  // 5 windows, none with 3 steps on each side
    CHECK_THROWS_AS(train(short_ds, c), Error);
}

TEST_CASE("non-finite loss aborts with its position") {
    auto c = tiny_config();
    auto ds = synth_dataset(c);
    std::fill(ds.windows.begin(), ds.windows.end(), 1e200);
    try {
        train(ds, c);
        FAIL("expected a numeric error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Numeric);
        CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
    }
}

TEST_CASE("forward predictor beats the last-value baseline on a clean sinusoid") {
    TrainConfig c = tiny_config();
    c.model.n_vars = 1;
    c.model.no_memory = true;
    c.epochs = 30;
    c.batches_per_epoch = 10;
    c.batch_size = 16;
    c.learning_rate = 3e-3;
    c.weights.gamma1 = 5.0;
    data::RawSeries s;
    s.n = 400;
    s.k = 1;
    for (std::size_t t = 0; t < s.n; ++t) s.values.push_back(0.5 + 0.4 * std::sin(2.0 * std::numbers::pi * t / 20.0));
    auto ds = data::window(s, c.model.window);
    auto [bundle, log] = train(ds, c);

    auto ends = eligible_windows(ds, c.model.pred_steps);
    auto batch = make_batch(ds, c.model.pred_steps, ends);
    nc::NoGradGuard no_grad;
    auto pred = bundle.model.predict_forward(bundle.model.memory_read(bundle.model.encode(batch.windows)).latent);
    double model_err = 0.0, naive_err = 0.0;
    for (std::size_t b = 0; b < ends.size(); ++b) {
        double last = s.values[ends[b]];
        // the farthest step carries zero weight in the loss, so it is not trained
        for (std::size_t i = 0; i + 1 < c.model.pred_steps; ++i) {
            double target = batch.forward_targets.at({b, i, 0});
            model_err += std::abs(pred.at({b, i, 0}) - target);
            naive_err += std::abs(last - target);
        }
    }
    CHECK(model_err < naive_err);
}

TEST_CASE("checkpoints") {
    auto c = tiny_config();
    auto ds = synth_dataset(c);
    auto [bundle, log] = train(ds, c);
    bundle.stats = data::NormalizationStats{{0.1, 0.2}, {1.5, 2.5}};
    auto dir = std::filesystem::temp_directory_path() / "memaae_ckpt_test";
    std::filesystem::create_directories(dir);
    auto path = dir / "model.ckpt";

    SUBCASE("round trip is bit-exact") {
        save_checkpoint(bundle, path);
        auto back = load_checkpoint(path);
        CHECK(back.config.to_kv() == bundle.config.to_kv());
        REQUIRE(back.model.parameters().size() == bundle.model.parameters().size());
        for (std::size_t i = 0; i < back.model.parameters().size(); ++i) {
            const auto& p = bundle.model.parameters()[i];
            const auto& q = back.model.parameters()[i];
            CHECK(p.name == q.name);
            CHECK(p.tensor.shape() == q.tensor.shape());
            CHECK(std::memcmp(p.tensor.values().data(), q.tensor.values().data(),
                              p.tensor.size() * sizeof(double)) == 0);
        }
        REQUIRE(back.stats.has_value());
        CHECK(back.stats->train_max == bundle.stats->train_max);
        CHECK(serialize_checkpoint(back) == serialize_checkpoint(bundle));
    }
    SUBCASE("truncation gives a structured error") {
        auto bytes = serialize_checkpoint(bundle);
        for (std::size_t cut : {std::size_t{0}, std::size_t{5}, bytes.size() / 2, bytes.size() - 1}) {
            try {
                deserialize_checkpoint(bytes.substr(0, cut));
                FAIL("expected a checkpoint error");
            } catch (const Error& e) {
                CHECK(e.kind() == ErrorKind::Checkpoint);
            }
        }
    }
    SUBCASE("bad magic and version") {
        auto bytes = serialize_checkpoint(bundle);
        auto bad = bytes;
        bad[0] = 'X';
        CHECK_THROWS_AS(deserialize_checkpoint(bad), Error);
        bad = bytes;
        bad[8] = 99;  // version field follows the 8-byte magic
        try {
            deserialize_checkpoint(bad);
            FAIL("expected a version error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("version") != std::string::npos);
        }
    }
    SUBCASE("loading into an incompatible layout names the block") {
        save_checkpoint(bundle, path);
        auto other = c;
        other.model.latent = 5;
        ModelBundle target(other);
        auto before = snapshot(target.model.encoder_params());
        try {
            load_parameters(target, path);
            FAIL("expected a shape error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Shape);
            CHECK(std::string(e.what()).find("encoder.out.weight") != std::string::npos);
        }
        CHECK(snapshot(target.model.encoder_params()) == before);
    }
    SUBCASE("missing file") { CHECK_THROWS_AS(load_checkpoint(dir / "absent.ckpt"), Error); }
    std::filesystem::remove_all(dir);
}
