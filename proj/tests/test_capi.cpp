#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "memaae/memaae.h"

namespace {

std::string temp(const char* name) { return (std::filesystem::temp_directory_path() / name).string(); }

memaae_config* tiny_config() {
    memaae_config* c = nullptr;
    REQUIRE(memaae_config_new(&c) == MEMAAE_OK);
    const char* kv[][2] = {{"window_size", "16"},  {"latent_size", "4"},       {"memory_size", "8"},
                           {"pred_step", "2"},     {"hidden_size", "8"},       {"conv_channels", "4,6"},
                           {"epochs", "2"},        {"batches_per_epoch", "2"}, {"batch_size", "4"},
                           {"seed", "5"}};
    for (auto& p : kv) REQUIRE(memaae_config_set(c, p[0], p[1]) == MEMAAE_OK);
    return c;
}

}  // namespace

TEST_CASE("errors carry a status and a message") {
    memaae_series* s = nullptr;
    CHECK(memaae_series_load_csv("/nonexistent.csv", nullptr, &s) == MEMAAE_ERR_IO);
    CHECK(s == nullptr);
    CHECK(std::string(memaae_last_error()).find("nonexistent") != std::string::npos);
    CHECK(std::string(memaae_status_name(MEMAAE_ERR_CONFIG)) == "configuration error");
    CHECK(memaae_series_from_values(nullptr, 1, 1, nullptr, &s) == MEMAAE_ERR_ARGUMENT);

    memaae_config* c = nullptr;
    REQUIRE(memaae_config_new(&c) == MEMAAE_OK);
    CHECK(memaae_config_set(c, "no_such_key", "1") == MEMAAE_ERR_CONFIG);
    CHECK(memaae_config_set(c, "window_size", "abc") == MEMAAE_ERR_CONFIG);
    memaae_config_free(c);
    memaae_series_free(nullptr);
    memaae_model_free(nullptr);
}

TEST_CASE("config strings report their size") {
    memaae_config* c = tiny_config();
    size_t needed = 0;
    char small[2];
    CHECK(memaae_config_get(c, "window_size", small, sizeof small, &needed) == MEMAAE_OK);
    CHECK(needed == 3);
    char buf[16];
    REQUIRE(memaae_config_get(c, "window_size", buf, sizeof buf, nullptr) == MEMAAE_OK);
    CHECK(std::string(buf) == "16");
    CHECK(memaae_config_to_string(c, nullptr, 0, &needed) == MEMAAE_OK);
    std::string text(needed, '\0');
    REQUIRE(memaae_config_to_string(c, text.data(), text.size(), nullptr) == MEMAAE_OK);
    CHECK(text.find("memory_size") != std::string::npos);
    memaae_config_free(c);
}

TEST_CASE("series values and labels") {
    std::vector<double> v = {1, 2, 3, 4, 5, 6};
    std::vector<uint8_t> l = {0, 1, 0};
    memaae_series* s = nullptr;
    REQUIRE(memaae_series_from_values(v.data(), 3, 2, l.data(), &s) == MEMAAE_OK);
    CHECK(memaae_series_rows(s) == 3);
    CHECK(memaae_series_cols(s) == 2);
    CHECK(memaae_series_has_labels(s));
    std::vector<double> back(6);
    REQUIRE(memaae_series_copy_values(s, back.data(), back.size()) == MEMAAE_OK);
    CHECK(back == v);
    CHECK(memaae_series_copy_values(s, back.data(), 2) != MEMAAE_OK);

    auto path = temp("memaae_capi_series.csv");
    REQUIRE(memaae_series_write_csv(s, path.c_str()) == MEMAAE_OK);
    memaae_series* loaded = nullptr;
    REQUIRE(memaae_series_load_csv(path.c_str(), "label", &loaded) == MEMAAE_OK);
    std::vector<uint8_t> lb(3);
    REQUIRE(memaae_series_copy_labels(loaded, lb.data(), 3) == MEMAAE_OK);
    CHECK(lb == l);
    memaae_series_free(loaded);
    memaae_series_free(s);
    std::remove(path.c_str());
}

TEST_CASE("metric entry points") {
    uint8_t pred[] = {0, 0, 1, 0, 0}, truth[] = {0, 1, 1, 1, 0}, out[5];
    REQUIRE(memaae_point_adjust(pred, truth, 5, out) == MEMAAE_OK);
    CHECK(std::vector<uint8_t>(out, out + 5) == std::vector<uint8_t>{0, 1, 1, 1, 0});
    double scores[] = {0.1, 0.2, 0.9, 0.3, 0.1};
    memaae_report r;
    REQUIRE(memaae_best_f1(scores, truth, 5, &r) == MEMAAE_OK);
    CHECK(r.f1 == 1.0);
    CHECK(r.tp == 3);
    CHECK(r.truth_has_anomalies);
}

TEST_CASE("train, save, load, score through the handle API") {
    memaae_series *train = nullptr, *test = nullptr;
    REQUIRE(memaae_synth_pair(3, 200, 120, 2, "point 60 1\n", &train, &test) == MEMAAE_OK);
    memaae_config* c = tiny_config();
    int epochs_seen = 0;
    auto cb = [](const memaae_epoch_stats* st, void* user) {
        ++*static_cast<int*>(user);
        CHECK(std::isfinite(st->full));
    };
    memaae_model* m = nullptr;
    REQUIRE(memaae_train(c, train, cb, &epochs_seen, &m) == MEMAAE_OK);
    CHECK(epochs_seen == 2);

    auto path = temp("memaae_capi.ckpt");
    REQUIRE(memaae_model_save(m, path.c_str()) == MEMAAE_OK);
    memaae_model* loaded = nullptr;
    REQUIRE(memaae_model_load(path.c_str(), &loaded) == MEMAAE_OK);

    memaae_scores *a = nullptr, *b = nullptr;
    REQUIRE(memaae_score(m, test, &a) == MEMAAE_OK);
    REQUIRE(memaae_score(loaded, test, &b) == MEMAAE_OK);
    REQUIRE(memaae_scores_count(a) == 120 - 16 + 1);
    CHECK(memaae_scores_first_index(a) == 15);
    std::vector<double> sa(memaae_scores_count(a)), sb(sa.size()), fwd(sa.size());
    REQUIRE(memaae_scores_copy(a, sa.data(), nullptr, fwd.data(), nullptr, sa.size()) == MEMAAE_OK);
    REQUIRE(memaae_scores_copy(b, sb.data(), nullptr, nullptr, nullptr, sb.size()) == MEMAAE_OK);
    CHECK(sa == sb);
    CHECK(std::isnan(fwd[0]));

    memaae_report r;
    REQUIRE(memaae_evaluate(a, test, nullptr, &r) == MEMAAE_OK);
    CHECK(r.f1 >= 0.0);
    CHECK(r.f1 <= 1.0);
    // excluding the only anomaly leaves nothing to find
    std::vector<uint8_t> exclude(120, 0);
    exclude[60] = 1;
    REQUIRE(memaae_evaluate(a, test, exclude.data(), &r) == MEMAAE_OK);
    CHECK_FALSE(r.truth_has_anomalies);

    memaae_series* wrong = nullptr;
    std::vector<double> v(3 * 40, 0.5);
    REQUIRE(memaae_series_from_values(v.data(), 40, 3, nullptr, &wrong) == MEMAAE_OK);
    memaae_scores* bad = nullptr;
    CHECK(memaae_score(m, wrong, &bad) == MEMAAE_ERR_SHAPE);
    CHECK(bad == nullptr);

    CHECK(memaae_model_load("/nonexistent.ckpt", &loaded) == MEMAAE_ERR_IO);

    memaae_series_free(wrong);
    memaae_scores_free(a);
    memaae_scores_free(b);
    memaae_model_free(loaded);
    memaae_model_free(m);
    memaae_config_free(c);
    memaae_series_free(train);
    memaae_series_free(test);
    std::remove(path.c_str());
}
