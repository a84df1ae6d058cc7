#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "memaae/error.hpp"
#include "memaae/model/memaae.hpp"
#include "memaae/numcore/adam.hpp"
#include "memaae/numcore/rng.hpp"
#include "memaae/objective/losses.hpp"

using namespace memaae;
using namespace memaae::model;
using nc::Tensor;

namespace {

ModelConfig small_config() {
    ModelConfig c;
    c.window = 16;
    c.n_vars = 2;
    c.latent = 4;
    c.memory_slots = 6;
    c.pred_steps = 3;
    c.hidden = 8;
    c.channels = {4, 6};
    return c;
}

Tensor random_windows(std::size_t batch, const ModelConfig& c, std::uint64_t seed) {
    nc::Rng rng(seed);
    std::vector<double> v(batch * c.window * c.n_vars);
    for (double& x : v) x = rng.uniform();
    return Tensor::from({batch, c.window, c.n_vars}, std::move(v));
}

void fill(Tensor& t, double value) { std::fill(t.values().begin(), t.values().end(), value); }

}  // namespace

TEST_CASE("default layout shapes") {
    ModelConfig c;
    c.n_vars = 3;
    CHECK(c.latent_length() == 8);
    MemAAE m(c, 1);
    auto x = random_windows(2, c, 4);
    auto z = m.encode(x);
    CHECK(z.shape() == nc::Shape{2, 8, 16});
    auto read = m.memory_read(z);
    CHECK(read.weights.shape() == nc::Shape{2, 8, 512});
    CHECK(read.latent.shape() == z.shape());
    CHECK(m.decode(read.latent).shape() == x.shape());
    CHECK(m.discriminate(x).shape() == nc::Shape{2, 1});
    CHECK(m.predict_forward(read.latent).shape() == nc::Shape{2, 7, 3});
    CHECK(m.predict_backward(read.latent).shape() == nc::Shape{2, 7, 3});
}

TEST_CASE("config validation rejects layouts that do not round-trip") {
    ModelConfig c;
    c.window = 30;  // 30 -> 15 -> 7 -> decoder gives 28
    CHECK_THROWS_AS(c.validate(), Error);
    ModelConfig ok;
    CHECK_NOTHROW(ok.validate());
    ModelConfig zero;
    zero.latent = 0;
    CHECK_THROWS_AS(zero.validate(), Error);
}

TEST_CASE("forward passes are deterministic and seeded") {
    auto c = small_config();
    MemAAE a(c, 7), b(c, 7), other(c, 8);
    auto x = random_windows(3, c, 1);
    auto za = a.encode(x), zb = b.encode(x);
    CHECK(std::equal(za.values().begin(), za.values().end(), zb.values().begin()));
    auto zo = other.encode(x);
    CHECK_FALSE(std::equal(za.values().begin(), za.values().end(), zo.values().begin()));

    auto zero = Tensor::zeros({1, c.window, c.n_vars});
    auto encoded = a.encode(zero);
    for (double v : encoded.values()) CHECK(std::isfinite(v));
}

TEST_CASE("memory addressing") {
    auto c = small_config();
    MemAAE m(c, 3);
    auto z = m.encode(random_windows(4, c, 2));

    SUBCASE("weights are distributions and reads stay in column bounds") {
        auto read = m.memory_read(z);
        const auto& slots = m.parameter("memory.slots");
        const std::size_t rows = 4 * c.latent_length();
        for (std::size_t r = 0; r < rows; ++r) {
            double total = 0.0;
            for (std::size_t s = 0; s < c.memory_slots; ++s) total += read.weights.values()[r * c.memory_slots + s];
            CHECK(std::abs(total - 1.0) < 1e-9);
            for (std::size_t d = 0; d < c.latent; ++d) {
                double lo = INFINITY, hi = -INFINITY;
                for (std::size_t s = 0; s < c.memory_slots; ++s) {
                    lo = std::min(lo, slots.at({s, d}));
                    hi = std::max(hi, slots.at({s, d}));
                }
                double v = read.latent.values()[r * c.latent + d];
                CHECK(v >= lo - 1e-12);
                CHECK(v <= hi + 1e-12);
            }
        }
    }
    SUBCASE("zero logits give uniform weights") {
        fill(m.parameter("memory.projection.weight"), 0.0);
        fill(m.parameter("memory.projection.bias"), 0.0);
        auto read = m.memory_read(z);
        for (double w : read.weights.values()) CHECK(w == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    }
    SUBCASE("a huge logit selects one slot exactly") {
        fill(m.parameter("memory.projection.weight"), 0.0);
        auto& bias = m.parameter("memory.projection.bias");
        fill(bias, 0.0);
        bias.values()[3] = 1e4;
        auto read = m.memory_read(z);
        const auto& slots = m.parameter("memory.slots");
        for (std::size_t r = 0; r < 4 * c.latent_length(); ++r)
            for (std::size_t d = 0; d < c.latent; ++d) CHECK(read.latent.values()[r * c.latent + d] == slots.at({3, d}));
    }
    SUBCASE("two slots mixed by hand") {
        ModelConfig two = small_config();
        two.latent = 2;
        two.memory_slots = 2;
        MemAAE mm(two, 1);
        auto& slots = mm.parameter("memory.slots");
        slots.values()[0] = 1;
        slots.values()[1] = 0;
        slots.values()[2] = 0;
        slots.values()[3] = 1;
        fill(mm.parameter("memory.projection.weight"), 0.0);
        auto& bias = mm.parameter("memory.projection.bias");
        bias.values()[0] = 0.0;
        bias.values()[1] = std::log(3.0);  // softmax -> [0.25, 0.75]
        auto read = mm.memory_read(Tensor::zeros({1, 1, 2}));
        CHECK(read.latent.values()[0] == doctest::Approx(0.25).epsilon(1e-15));
        CHECK(read.latent.values()[1] == doctest::Approx(0.75).epsilon(1e-15));
    }
    SUBCASE("disabled memory passes the latent through unchanged") {
        ModelConfig nm = small_config();
        nm.no_memory = true;
        MemAAE bypass(nm, 3);
        auto zz = bypass.encode(random_windows(2, nm, 9));
        auto read = bypass.memory_read(zz);
        CHECK(read.latent.node() == zz.node());
        CHECK_FALSE(read.weights.defined());
    }
    SUBCASE("reconstruction gradient reaches the memory") {
        auto x = random_windows(2, c, 5);
        auto xhat = m.decode(m.memory_read(m.encode(x)).latent);
        nc::backward(objective::loss_rec(x, xhat));
        const auto& slots = m.parameter("memory.slots");
        REQUIRE(slots.has_grad());
        CHECK(std::any_of(slots.grad().begin(), slots.grad().end(), [](double g) { return g != 0.0; }));
    }
}

TEST_CASE("discriminator") {
    auto c = small_config();
    MemAAE m(c, 2);
    nc::Rng rng(1);
    std::vector<double> wild(2 * c.window * c.n_vars);
    for (double& v : wild) v = rng.uniform(-50, 50);
    auto p = m.discriminate(Tensor::from({2, c.window, c.n_vars}, wild));
    for (double v : p.values()) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
    fill(m.parameter("discriminator.out.weight"), 0.0);
    auto probs = m.discriminate(random_windows(3, c, 2));
    for (double v : probs.values()) CHECK(v == 0.5);
}

TEST_CASE("discriminator learns to separate toy real and fake sets") {
    auto c = small_config();
    MemAAE m(c, 4);
    auto params = m.discriminator_params();
    nc::Adam opt(params, {.learning_rate = 1e-2});
    auto real = random_windows(8, c, 1);
    auto fake = Tensor::from(real.shape(), std::vector<double>(real.size(), 0.0));
    for (double& v : fake.values()) v = 0.0;
    for (std::size_t i = 0; i < real.size(); ++i) fake.values()[i] = 1.0 - real.values()[i] * 0.2;
    for (int step = 0; step < 60; ++step) {
        auto adv = objective::loss_adv(m.discriminate(real), m.discriminate(fake));
        nc::backward(adv.discriminator);
        opt.step();
    }
    auto mean_of = [](const Tensor& t) {
        double s = 0.0;
        for (double v : t.values()) s += v;
        return s / static_cast<double>(t.size());
    };
    CHECK(mean_of(m.discriminate(real)) > mean_of(m.discriminate(fake)));
}

TEST_CASE("predictors have independent parameters") {
    auto c = small_config();
    MemAAE m(c, 5);
    auto latent = m.memory_read(m.encode(random_windows(2, c, 3))).latent;
    auto f = m.predict_forward(latent), b = m.predict_backward(latent);
    CHECK(f.shape() == nc::Shape{2, 3, 2});
    CHECK_FALSE(std::equal(f.values().begin(), f.values().end(), b.values().begin()));
    auto fp = m.forward_predictor_params(), bp = m.backward_predictor_params();
    for (auto& a : fp)
        for (auto& bb : bp) CHECK(a.node() != bb.node());
}

TEST_CASE("backward predictor reads the sequence in reverse") {
    // Copying the forward weights into the backward predictor and reversing the
    // latent sequence must reproduce the forward output exactly.
    auto c = small_config();
    MemAAE m(c, 6);
    for (const char* suffix : {"lstm.input_weight", "lstm.hidden_weight", "lstm.bias", "fc1.weight", "fc1.bias",
                               "fc2.weight", "fc2.bias"}) {
        auto src = m.parameter(std::string("predictor.forward.") + suffix).values();
        auto dst = m.parameter(std::string("predictor.backward.") + suffix).values();
        std::copy(src.begin(), src.end(), dst.begin());
    }
    auto latent = m.encode(random_windows(1, c, 8));
    const std::size_t L = c.latent_length();
    std::vector<Tensor> rev;
    for (std::size_t i = 0; i < L; ++i) rev.push_back(nc::slice(latent, 1, L - 1 - i, 1));
    auto reversed = nc::concat(rev, 1);
    auto f = m.predict_forward(latent), b = m.predict_backward(reversed);
    CHECK(std::equal(f.values().begin(), f.values().end(), b.values().begin()));
}

TEST_CASE("parameter groups partition the model") {
    auto c = small_config();
    MemAAE m(c, 1);
    std::size_t grouped = m.encoder_params().size() + m.decoder_params().size() + m.memory_params().size() +
                          m.discriminator_params().size() + m.forward_predictor_params().size() +
                          m.backward_predictor_params().size();
    CHECK(grouped == m.parameters().size());
    auto gen = m.generator_params();
    for (auto& d : m.discriminator_params())
        for (auto& g : gen) CHECK(d.node() != g.node());

    ModelConfig ablated = c;
    ablated.no_memory = true;
    ablated.no_prediction = true;
    MemAAE plain(ablated, 1);
    CHECK(plain.generator_params().size() == plain.encoder_params().size() + plain.decoder_params().size());
    CHECK_THROWS_AS(m.parameter("no.such.block"), Error);
}

TEST_CASE("autoencoder overfits a single constant window") {
    auto c = small_config();
    c.no_prediction = true;
    MemAAE m(c, 2);
    auto x = Tensor::from({1, c.window, c.n_vars}, std::vector<double>(c.window * c.n_vars, 0.6));
    auto params = m.generator_params();
    nc::Adam opt(params, {.learning_rate = 1e-2});
    for (int step = 0; step < 300; ++step) {
        auto xhat = m.decode(m.memory_read(m.encode(x)).latent);
        nc::backward(nc::mean(nc::mul(nc::sub(x, xhat), nc::sub(x, xhat))));
        opt.step();
    }
    auto xhat = m.decode(m.memory_read(m.encode(x)).latent);
    double mse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) mse += std::pow(x.values()[i] - xhat.values()[i], 2);
    CHECK(mse / static_cast<double>(x.size()) < 1e-3);
}

TEST_CASE("shape errors on wrong inputs") {
    auto c = small_config();
    MemAAE m(c, 1);
    CHECK_THROWS_AS(m.encode(Tensor::zeros({1, c.window + 1, c.n_vars})), Error);
    CHECK_THROWS_AS(m.decode(Tensor::zeros({1, 3, c.latent})), Error);
    CHECK_THROWS_AS(m.memory_read(Tensor::zeros({1, 4, c.latent + 1})), Error);
}
