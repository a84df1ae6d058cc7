#include "memaae/memaae.h"

#include <cstring>
#include <new>
#include <string>

#include "memaae/data/series.hpp"
#include "memaae/data/synth.hpp"
#include "memaae/error.hpp"
#include "memaae/evaluation/scoring.hpp"
#include "memaae/training/config.hpp"
#include "memaae/training/trainer.hpp"

struct memaae_series {
    memaae::data::RawSeries series;
};

struct memaae_config {
    memaae::training::TrainConfig config;
};

struct memaae_model {
    memaae::training::ModelBundle bundle;
};

struct memaae_scores {
    memaae::evaluation::ScoreSeries scores;
};

namespace {

thread_local std::string g_last_error;

memaae_status status_for(memaae::ErrorKind kind) {
    using memaae::ErrorKind;
    switch (kind) {
        case ErrorKind::Shape: return MEMAAE_ERR_SHAPE;
        case ErrorKind::Domain: return MEMAAE_ERR_DOMAIN;
        case ErrorKind::Parse: return MEMAAE_ERR_PARSE;
        case ErrorKind::Config: return MEMAAE_ERR_CONFIG;
        case ErrorKind::Io: return MEMAAE_ERR_IO;
        case ErrorKind::Checkpoint: return MEMAAE_ERR_CHECKPOINT;
        case ErrorKind::Numeric: return MEMAAE_ERR_NUMERIC;
        case ErrorKind::Argument: return MEMAAE_ERR_ARGUMENT;
    }
    return MEMAAE_ERR_INTERNAL;
}

memaae_status fail(memaae_status status, std::string message) {
    g_last_error = std::move(message);
    return status;
}

template <class Fn>
memaae_status guarded(Fn&& fn) {
    try {
        g_last_error.clear();
        fn();
        return MEMAAE_OK;
    } catch (const memaae::Error& e) {
        return fail(status_for(e.kind()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(MEMAAE_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(MEMAAE_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(MEMAAE_ERR_INTERNAL, "unknown error");
    }
}

void require(const void* p, const char* what) {
    if (!p) throw memaae::Error(memaae::ErrorKind::Argument, std::string(what) + " must not be NULL");
}

void copy_string(const std::string& s, char* buf, std::size_t capacity, std::size_t* needed) {
    if (needed) *needed = s.size() + 1;
    if (buf && capacity) {
        std::size_t n = std::min(capacity - 1, s.size());
        std::memcpy(buf, s.data(), n);
        buf[n] = '\0';
    }
}

memaae_report to_c(const memaae::evaluation::EvalReport& r, bool has_anomalies) {
    memaae_report out{};
    out.precision = r.precision;
    out.recall = r.recall;
    out.f1 = r.f1;
    out.threshold = r.best_threshold;
    out.tp = r.counts.tp;
    out.fp = r.counts.fp;
    out.fn = r.counts.fn;
    out.tn = r.counts.tn;
    out.truth_has_anomalies = has_anomalies ? 1 : 0;
    return out;
}

}  // namespace

extern "C" {

const char* memaae_version(void) { return "0.1.0"; }

const char* memaae_last_error(void) { return g_last_error.c_str(); }

const char* memaae_status_name(memaae_status status) {
    switch (status) {
        case MEMAAE_OK: return "ok";
        case MEMAAE_ERR_ARGUMENT: return "invalid argument";
        case MEMAAE_ERR_CONFIG: return "configuration error";
        case MEMAAE_ERR_PARSE: return "parse error";
        case MEMAAE_ERR_IO: return "i/o error";
        case MEMAAE_ERR_SHAPE: return "shape error";
        case MEMAAE_ERR_DOMAIN: return "domain error";
        case MEMAAE_ERR_CHECKPOINT: return "checkpoint error";
        case MEMAAE_ERR_NUMERIC: return "numeric error";
        case MEMAAE_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

// ---- series -------------------------------------------------------------------

memaae_status memaae_series_load_csv(const char* path, const char* label_column, memaae_series** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        std::optional<std::string> label;
        if (label_column) label = label_column;
        *out = new memaae_series{memaae::data::load_csv(path, label)};
    });
}

memaae_status memaae_series_from_values(const double* values, size_t n, size_t k, const uint8_t* labels,
                                        memaae_series** out) {
    return guarded([&] {
        require(values, "values");
        require(out, "out");
        memaae::data::RawSeries s;
        s.n = n;
        s.k = k;
        s.values.assign(values, values + n * k);
        if (labels) {
            s.labels.emplace(n);
            for (size_t i = 0; i < n; ++i) (*s.labels)[i] = labels[i] != 0;
        }
        s.validate();
        *out = new memaae_series{std::move(s)};
    });
}

void memaae_series_free(memaae_series* series) { delete series; }
size_t memaae_series_rows(const memaae_series* series) { return series ? series->series.n : 0; }
size_t memaae_series_cols(const memaae_series* series) { return series ? series->series.k : 0; }
int memaae_series_has_labels(const memaae_series* series) {
    return series && series->series.labels.has_value() ? 1 : 0;
}

memaae_status memaae_series_copy_values(const memaae_series* series, double* dst, size_t capacity) {
    return guarded([&] {
        require(series, "series");
        require(dst, "dst");
        const auto& v = series->series.values;
        if (capacity < v.size()) throw memaae::Error(memaae::ErrorKind::Argument, "destination too small");
        std::copy(v.begin(), v.end(), dst);
    });
}

memaae_status memaae_series_copy_labels(const memaae_series* series, uint8_t* dst, size_t capacity) {
    return guarded([&] {
        require(series, "series");
        require(dst, "dst");
        if (!series->series.labels) throw memaae::Error(memaae::ErrorKind::Argument, "series has no labels");
        const auto& l = *series->series.labels;
        if (capacity < l.size()) throw memaae::Error(memaae::ErrorKind::Argument, "destination too small");
        for (size_t i = 0; i < l.size(); ++i) dst[i] = l[i] ? 1 : 0;
    });
}

memaae_status memaae_series_write_csv(const memaae_series* series, const char* path) {
    return guarded([&] {
        require(series, "series");
        require(path, "path");
        memaae::data::write_csv(series->series, path);
    });
}

// ---- synth --------------------------------------------------------------------

memaae_status memaae_synth_pair(uint64_t seed, size_t n_train, size_t n_test, size_t n_vars, const char* spec_text,
                                memaae_series** train, memaae_series** test) {
    return guarded([&] {
        require(train, "train");
        require(test, "test");
        auto spec = spec_text ? memaae::data::parse_anomaly_spec(spec_text)
                              : memaae::data::default_anomaly_spec(n_test);
        auto [tr, te] = memaae::data::synth_pair(seed, n_train, n_test, n_vars, spec);
        auto* a = new memaae_series{std::move(tr)};
        auto* b = new (std::nothrow) memaae_series{std::move(te)};
        if (!b) {
            delete a;
            throw std::bad_alloc();
        }
        *train = a;
        *test = b;
    });
}

memaae_status memaae_default_spec(size_t n_test, char* buf, size_t capacity, size_t* needed) {
    return guarded([&] {
        copy_string(memaae::data::format_anomaly_spec(memaae::data::default_anomaly_spec(n_test)), buf, capacity,
                    needed);
    });
}

// ---- config -------------------------------------------------------------------

memaae_status memaae_config_new(memaae_config** out) {
    return guarded([&] {
        require(out, "out");
        *out = new memaae_config{};
    });
}

memaae_status memaae_config_load(const char* path, memaae_config** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new memaae_config{memaae::training::load_config(path)};
    });
}

memaae_status memaae_config_clone(const memaae_config* config, memaae_config** out) {
    return guarded([&] {
        require(config, "config");
        require(out, "out");
        *out = new memaae_config{config->config};
    });
}

void memaae_config_free(memaae_config* config) { delete config; }

memaae_status memaae_config_set(memaae_config* config, const char* key, const char* value) {
    return guarded([&] {
        require(config, "config");
        require(key, "key");
        require(value, "value");
        auto updated = config->config;
        updated.set(key, value);
        config->config = std::move(updated);
    });
}

memaae_status memaae_config_get(const memaae_config* config, const char* key, char* buf, size_t capacity,
                                size_t* needed) {
    return guarded([&] {
        require(config, "config");
        require(key, "key");
        const auto wanted = memaae::training::canonical_key(key);
        for (const auto& [k, v] : config->config.to_kv())
            if (k == wanted) return copy_string(v, buf, capacity, needed);
        throw memaae::Error(memaae::ErrorKind::Config, std::string("unknown config key '") + key + "'");
    });
}

memaae_status memaae_config_to_string(const memaae_config* config, char* buf, size_t capacity, size_t* needed) {
    return guarded([&] {
        require(config, "config");
        copy_string(memaae::training::format_config(config->config), buf, capacity, needed);
    });
}

// ---- training -----------------------------------------------------------------

memaae_status memaae_train(const memaae_config* config, const memaae_series* train_raw, memaae_epoch_callback callback,
                           void* user, memaae_model** out) {
    return guarded([&] {
        require(config, "config");
        require(train_raw, "train_raw");
        require(out, "out");
        auto cfg = config->config;
        cfg.model.n_vars = train_raw->series.k;
        cfg.validate();
        auto stats = memaae::data::fit_normalize(train_raw->series);
        auto normalized = memaae::data::apply_normalize(train_raw->series, stats);
        auto windows = memaae::data::window(normalized, cfg.model.window);
        memaae::training::EpochCallback on_epoch;
        if (callback)
            on_epoch = [&](std::size_t epoch, const memaae::training::EpochLog& log) {
                memaae_epoch_stats s{epoch,
                                     log.mean.rec,
                                     log.mean.adv_d,
                                     log.mean.adv_g,
                                     log.mean.pred_fwd,
                                     log.mean.pred_back,
                                     log.mean.full,
                                     log.seconds};
                callback(&s, user);
            };
        auto [bundle, log] = memaae::training::train(windows, cfg, on_epoch);
        bundle.stats = std::move(stats);
        *out = new memaae_model{std::move(bundle)};
    });
}

memaae_status memaae_model_save(const memaae_model* model, const char* path) {
    return guarded([&] {
        require(model, "model");
        require(path, "path");
        memaae::training::save_checkpoint(model->bundle, path);
    });
}

memaae_status memaae_model_load(const char* path, memaae_model** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new memaae_model{memaae::training::load_checkpoint(path)};
    });
}

memaae_status memaae_model_config(const memaae_model* model, memaae_config** out) {
    return guarded([&] {
        require(model, "model");
        require(out, "out");
        *out = new memaae_config{model->bundle.config};
    });
}

void memaae_model_free(memaae_model* model) { delete model; }

// ---- scoring ------------------------------------------------------------------

memaae_status memaae_score(const memaae_model* model, const memaae_series* test_raw, memaae_scores** out) {
    return guarded([&] {
        require(model, "model");
        require(test_raw, "test_raw");
        require(out, "out");
        *out = new memaae_scores{memaae::evaluation::score_raw(model->bundle, test_raw->series)};
    });
}

void memaae_scores_free(memaae_scores* scores) { delete scores; }
size_t memaae_scores_count(const memaae_scores* scores) { return scores ? scores->scores.size() : 0; }
size_t memaae_scores_first_index(const memaae_scores* scores) { return scores ? scores->scores.first_index : 0; }

memaae_status memaae_scores_copy(const memaae_scores* scores, double* score, double* rec, double* pred_fwd,
                                 double* pred_back, size_t capacity) {
    return guarded([&] {
        require(scores, "scores");
        const auto& s = scores->scores;
        if (capacity < s.size()) throw memaae::Error(memaae::ErrorKind::Argument, "destination too small");
        if (score) std::copy(s.score.begin(), s.score.end(), score);
        if (rec) std::copy(s.rec.begin(), s.rec.end(), rec);
        if (pred_fwd) std::copy(s.pred_fwd.begin(), s.pred_fwd.end(), pred_fwd);
        if (pred_back) std::copy(s.pred_back.begin(), s.pred_back.end(), pred_back);
    });
}

memaae_status memaae_scores_write_csv(const memaae_scores* scores, const char* path) {
    return guarded([&] {
        require(scores, "scores");
        require(path, "path");
        memaae::evaluation::write_scores_csv(scores->scores, path);
    });
}

memaae_status memaae_evaluate(const memaae_scores* scores, const memaae_series* labeled, const uint8_t* exclude,
                              memaae_report* out) {
    return guarded([&] {
        require(scores, "scores");
        require(labeled, "labeled");
        require(out, "out");
        if (!labeled->series.labels)
            throw memaae::Error(memaae::ErrorKind::Argument, "evaluation series has no labels");
        const auto& s = scores->scores;
        auto truth = memaae::evaluation::aligned_truth(s, *labeled->series.labels);
        std::vector<double> kept_scores;
        std::vector<bool> kept_truth;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (exclude && exclude[s.first_index + i]) continue;
            kept_scores.push_back(s.score[i]);
            kept_truth.push_back(truth[i]);
        }
        auto report = memaae::evaluation::best_f1(kept_scores, kept_truth);
        *out = to_c(report, report.warning.empty());
    });
}

memaae_status memaae_best_f1(const double* scores, const uint8_t* truth, size_t n, memaae_report* out) {
    return guarded([&] {
        require(scores, "scores");
        require(truth, "truth");
        require(out, "out");
        std::vector<bool> t(n);
        for (size_t i = 0; i < n; ++i) t[i] = truth[i] != 0;
        auto report = memaae::evaluation::best_f1({scores, n}, t);
        *out = to_c(report, report.warning.empty());
    });
}

memaae_status memaae_point_adjust(const uint8_t* pred, const uint8_t* truth, size_t n, uint8_t* out) {
    return guarded([&] {
        require(pred, "pred");
        require(truth, "truth");
        require(out, "out");
        std::vector<bool> p(n), t(n);
        for (size_t i = 0; i < n; ++i) {
            p[i] = pred[i] != 0;
            t[i] = truth[i] != 0;
        }
        auto adjusted = memaae::evaluation::point_adjust(p, t);
        for (size_t i = 0; i < n; ++i) out[i] = adjusted[i] ? 1 : 0;
    });
}

}  // extern "C"
