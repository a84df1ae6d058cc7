// memaae command-line tool. Talks to the library only through memaae.h.

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "memaae/memaae.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// Thrown for bad invocations (exit 2); library failures exit 1 unless they
// stem from user-provided configuration.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RuntimeFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check(memaae_status status, const std::string& what) {
    if (status == MEMAAE_OK) return;
    std::string message = what + ": " + memaae_last_error();
    if (status == MEMAAE_ERR_CONFIG) throw UsageError(message);
    throw RuntimeFailure(message);
}

template <class T, void (*Free)(T*)>
struct Deleter {
    void operator()(T* p) const { Free(p); }
};
using SeriesPtr = std::unique_ptr<memaae_series, Deleter<memaae_series, memaae_series_free>>;
using ConfigPtr = std::unique_ptr<memaae_config, Deleter<memaae_config, memaae_config_free>>;
using ModelPtr = std::unique_ptr<memaae_model, Deleter<memaae_model, memaae_model_free>>;
using ScoresPtr = std::unique_ptr<memaae_scores, Deleter<memaae_scores, memaae_scores_free>>;

void require_file(const std::string& path, const std::string& flag) {
    if (!fs::is_regular_file(path)) throw UsageError(flag + ": file not found: " + path);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RuntimeFailure("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw RuntimeFailure("cannot write " + path.string());
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw RuntimeFailure("cannot create directory " + dir.string() + ": " + ec.message());
}

// The label column is optional for training and scoring, so only ask the
// loader for it when the header has it.
bool header_has(const std::string& path, const std::string& column) {
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    if (!header.empty() && header.back() == '\r') header.pop_back();
    std::stringstream cells(header);
    std::string cell;
    while (std::getline(cells, cell, ','))
        if (cell == column) return true;
    return false;
}

SeriesPtr load_series(const std::string& path, const std::string& flag, const std::string& labels,
                      bool labels_required) {
    require_file(path, flag);
    const bool has = header_has(path, labels);
    if (labels_required && !has) throw UsageError(flag + ": no label column '" + labels + "' in " + path);
    memaae_series* raw = nullptr;
    check(memaae_series_load_csv(path.c_str(), has ? labels.c_str() : nullptr, &raw), "loading " + path);
    return SeriesPtr(raw);
}

template <class Fn>
std::string fetch_string(Fn&& fn, const std::string& what) {
    std::size_t needed = 0;
    check(fn(nullptr, 0, &needed), what);
    std::string out(needed, '\0');
    check(fn(out.data(), out.size(), &needed), what);
    out.resize(needed ? needed - 1 : 0);
    return out;
}

std::string config_text(const memaae_config* cfg) {
    return fetch_string([&](char* b, std::size_t c, std::size_t* n) { return memaae_config_to_string(cfg, b, c, n); },
                        "formatting config");
}

std::string config_value(const memaae_config* cfg, const std::string& key) {
    return fetch_string(
        [&](char* b, std::size_t c, std::size_t* n) { return memaae_config_get(cfg, key.c_str(), b, c, n); },
        "reading config key " + key);
}

ConfigPtr base_config(const std::string& path, const std::vector<std::string>& overrides) {
    memaae_config* raw = nullptr;
    if (path.empty()) {
        check(memaae_config_new(&raw), "creating config");
    } else {
        require_file(path, "--config");
        check(memaae_config_load(path.c_str(), &raw), "loading " + path);
    }
    ConfigPtr cfg(raw);
    for (const auto& kv : overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
        check(memaae_config_set(cfg.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()), "--set " + kv);
    }
    return cfg;
}

void set_key(memaae_config* cfg, const std::string& key, const std::string& value) {
    check(memaae_config_set(cfg, key.c_str(), value.c_str()), "setting " + key);
}

void apply_ablation(memaae_config* cfg, const std::string& ablation) {
    set_key(cfg, "no_memory", ablation == "no_memory" ? "true" : "false");
    set_key(cfg, "no_prediction", ablation == "no_prediction" ? "true" : "false");
}

std::string ablation_of(const memaae_config* cfg) {
    const bool nm = config_value(cfg, "no_memory") == "true";
    const bool np = config_value(cfg, "no_prediction") == "true";
    if (nm && np) return "no_memory+no_prediction";
    if (nm) return "no_memory";
    if (np) return "no_prediction";
    return "full";
}

const std::vector<std::string> kAblations = {"full", "no_memory", "no_prediction"};

struct EpochLogger {
    std::ofstream* file = nullptr;
    bool quiet = false;
};

void on_epoch(const memaae_epoch_stats* s, void* user) {
    auto* log = static_cast<EpochLogger*>(user);
    if (log->file)
        *log->file << s->epoch << ',' << s->rec << ',' << s->adv_d << ',' << s->adv_g << ',' << s->pred_fwd << ','
                   << s->pred_back << ',' << s->full << ',' << s->seconds << '\n';
    if (!log->quiet)
        std::cerr << "epoch " << s->epoch << "  rec " << s->rec << "  adv_d " << s->adv_d << "  adv_g " << s->adv_g
                  << "  pred_fwd " << s->pred_fwd << "  pred_back " << s->pred_back << "  (" << std::fixed
                  << std::setprecision(2) << s->seconds << "s)" << std::defaultfloat << std::setprecision(6)
                  << '\n';
}

ModelPtr train_model(const memaae_config* cfg, const memaae_series* train, const fs::path& log_path, bool quiet) {
    std::ofstream log;
    EpochLogger logger{nullptr, quiet};
    if (!log_path.empty()) {
        log.open(log_path);
        if (!log) throw RuntimeFailure("cannot write " + log_path.string());
        log << "epoch,rec,adv_d,adv_g,pred_fwd,pred_back,full,seconds\n" << std::setprecision(17);
        logger.file = &log;
    }
    memaae_model* raw = nullptr;
    check(memaae_train(cfg, train, on_epoch, &logger, &raw), "training");
    return ModelPtr(raw);
}

memaae_report evaluate(const memaae_model* model, const memaae_series* test, const fs::path& scores_csv) {
    memaae_scores* raw = nullptr;
    check(memaae_score(model, test, &raw), "scoring");
    ScoresPtr scores(raw);
    if (!scores_csv.empty()) check(memaae_scores_write_csv(scores.get(), scores_csv.string().c_str()), "writing scores");
    memaae_report report{};
    check(memaae_evaluate(scores.get(), test, nullptr, &report), "evaluating");
    return report;
}

std::string format_report(const memaae_report& r) {
    std::ostringstream out;
    out << std::setprecision(10) << "precision = " << r.precision << "\nrecall = " << r.recall << "\nf1 = " << r.f1
        << "\nthreshold = " << r.threshold << "\ntp = " << r.tp << "\nfp = " << r.fp << "\nfn = " << r.fn
        << "\ntn = " << r.tn << '\n';
    if (!r.truth_has_anomalies) out << "warning = no anomalies in ground truth; F1 reported as 0\n";
    return out.str();
}

std::string fmt(double v) {
    std::ostringstream out;
    out << std::setprecision(6) << v;
    return out.str();
}

// ---- commands -----------------------------------------------------------------

struct SynthArgs {
    std::string spec, out = "data";
    std::uint64_t seed = 0;
    std::size_t n_train = 2000, n_test = 2000, vars = 3;
};

int run_synth(const SynthArgs& a) {
    std::string spec_text;
    if (!a.spec.empty()) {
        require_file(a.spec, "--spec");
        spec_text = read_text(a.spec);
    } else {
        spec_text = fetch_string(
            [&](char* b, std::size_t c, std::size_t* n) { return memaae_default_spec(a.n_test, b, c, n); },
            "default spec");
    }
    memaae_series *tr = nullptr, *te = nullptr;
    memaae_status st = memaae_synth_pair(a.seed, a.n_train, a.n_test, a.vars, spec_text.c_str(), &tr, &te);
    if (st == MEMAAE_ERR_PARSE || st == MEMAAE_ERR_ARGUMENT)
        throw UsageError(std::string("invalid anomaly spec: ") + memaae_last_error());
    check(st, "generating data");
    SeriesPtr train(tr), test(te);
    const fs::path out(a.out);
    ensure_dir(out);
    check(memaae_series_write_csv(train.get(), (out / "train.csv").string().c_str()), "writing train.csv");
    check(memaae_series_write_csv(test.get(), (out / "test.csv").string().c_str()), "writing test.csv");
    write_text(out / "spec.txt", spec_text);
    std::ostringstream run;
    run << "command = synth\nseed = " << a.seed << "\nn_train = " << a.n_train << "\nn_test = " << a.n_test
        << "\nvariables = " << a.vars << "\nspec = " << (a.spec.empty() ? "<default>" : a.spec) << '\n';
    write_text(out / "run.txt", run.str());
    std::cout << "wrote " << (out / "train.csv").string() << " and " << (out / "test.csv").string() << '\n';
    return kExitOk;
}

struct TrainArgs {
    std::string train_csv, config, checkpoint, labels = "label", ablation;
    std::vector<std::string> overrides;
    long long epochs = -1;
    long long seed = -1;
    bool quiet = false;
};

int run_train(const TrainArgs& a) {
    auto cfg = base_config(a.config, a.overrides);
    if (a.epochs >= 0) set_key(cfg.get(), "epochs", std::to_string(a.epochs));
    if (a.seed >= 0) set_key(cfg.get(), "seed", std::to_string(a.seed));
    if (!a.ablation.empty()) apply_ablation(cfg.get(), a.ablation);
    auto train = load_series(a.train_csv, "--train-csv", a.labels, false);
    const fs::path ckpt(a.checkpoint);
    if (ckpt.has_parent_path()) ensure_dir(ckpt.parent_path());
    auto model = train_model(cfg.get(), train.get(), ckpt.string() + ".log.csv", a.quiet);
    check(memaae_model_save(model.get(), ckpt.string().c_str()), "saving checkpoint");
    memaae_config* used_raw = nullptr;
    check(memaae_model_config(model.get(), &used_raw), "reading model config");
    ConfigPtr used(used_raw);
    write_text(ckpt.string() + ".config", config_text(used.get()));
    std::cout << "wrote " << ckpt.string() << '\n';
    return kExitOk;
}

struct ScoreArgs {
    std::string checkpoint, test_csv, out = "scores.csv", labels = "label";
};

ModelPtr load_model(const std::string& path) {
    require_file(path, "--checkpoint");
    memaae_model* raw = nullptr;
    check(memaae_model_load(path.c_str(), &raw), "loading " + path);
    return ModelPtr(raw);
}

int run_score(const ScoreArgs& a) {
    auto model = load_model(a.checkpoint);
    auto test = load_series(a.test_csv, "--test-csv", a.labels, false);
    memaae_scores* raw = nullptr;
    check(memaae_score(model.get(), test.get(), &raw), "scoring");
    ScoresPtr scores(raw);
    check(memaae_scores_write_csv(scores.get(), a.out.c_str()), "writing scores");
    std::cout << "wrote " << memaae_scores_count(scores.get()) << " scores to " << a.out << '\n';
    return kExitOk;
}

struct EvalArgs {
    std::string checkpoint, test_csv, labels = "label", ablation, out_dir = ".";
};

int run_eval(const EvalArgs& a) {
    auto model = load_model(a.checkpoint);
    memaae_config* raw_cfg = nullptr;
    check(memaae_model_config(model.get(), &raw_cfg), "reading model config");
    ConfigPtr cfg(raw_cfg);
    const std::string trained_as = ablation_of(cfg.get());
    if (!a.ablation.empty() && a.ablation != trained_as)
        throw UsageError("--ablation " + a.ablation + " does not match the checkpoint, which was trained as " +
                         trained_as);
    auto test = load_series(a.test_csv, "--test-csv", a.labels, true);
    const fs::path out(a.out_dir);
    ensure_dir(out);
    auto report = evaluate(model.get(), test.get(), out / "scores.csv");
    const std::string text = format_report(report);
    std::ostringstream record;
    record << text << "\n# checkpoint = " << a.checkpoint << "\n# test_csv = " << a.test_csv
           << "\n# ablation = " << trained_as << '\n';
    std::istringstream lines(config_text(cfg.get()));
    for (std::string line; std::getline(lines, line);) record << "# " << line << '\n';
    write_text(out / "report.txt", record.str());
    std::cout << text;
    return kExitOk;
}

struct ExperimentArgs {
    std::string train_csv, test_csv, config, labels = "label", out_dir = "results";
    std::vector<std::string> overrides;
    long long epochs = -1;
    long long seed = -1;
    bool quiet = false;
};

ConfigPtr experiment_config(const ExperimentArgs& a) {
    auto cfg = base_config(a.config, a.overrides);
    if (a.epochs >= 0) set_key(cfg.get(), "epochs", std::to_string(a.epochs));
    if (a.seed >= 0) set_key(cfg.get(), "seed", std::to_string(a.seed));
    return cfg;
}

struct Trial {
    std::string label;
    ConfigPtr config;
};

// Trains and evaluates each trial in order, writing per-trial artifacts under
// out_dir/<label>/ and one summary row per trial.
int run_trials(const ExperimentArgs& a, std::vector<Trial>& trials, const std::string& first_column,
               const std::string& table_name) {
    auto train = load_series(a.train_csv, "--train-csv", a.labels, false);
    auto test = load_series(a.test_csv, "--test-csv", a.labels, true);
    const fs::path out(a.out_dir);
    ensure_dir(out);
    std::ofstream table(out / table_name);
    if (!table) throw RuntimeFailure("cannot write " + (out / table_name).string());
    table << first_column << ",precision,recall,f1,threshold\n" << std::setprecision(10);
    std::cout << std::left << std::setw(16) << first_column << std::setw(12) << "precision" << std::setw(12)
              << "recall" << std::setw(12) << "f1"
              << "threshold\n";
    for (auto& trial : trials) {
        const fs::path dir = out / trial.label;
        ensure_dir(dir);
        write_text(dir / "config.txt", config_text(trial.config.get()));
        auto model = train_model(trial.config.get(), train.get(), dir / "train_log.csv", a.quiet);
        check(memaae_model_save(model.get(), (dir / "model.ckpt").string().c_str()), "saving checkpoint");
        auto report = evaluate(model.get(), test.get(), dir / "scores.csv");
        write_text(dir / "report.txt", format_report(report));
        table << trial.label << ',' << report.precision << ',' << report.recall << ',' << report.f1 << ','
              << report.threshold << '\n';
        table.flush();
        std::cout << std::left << std::setw(16) << trial.label << std::setw(12) << fmt(report.precision)
                  << std::setw(12) << fmt(report.recall) << std::setw(12) << fmt(report.f1) << fmt(report.threshold)
                  << '\n'
                  << std::flush;
    }
    return kExitOk;
}

int run_ablate(const ExperimentArgs& a, const std::vector<std::string>& variants) {
    auto base = experiment_config(a);
    std::vector<Trial> trials;
    for (const auto& v : variants) {
        memaae_config* raw = nullptr;
        check(memaae_config_clone(base.get(), &raw), "copying config");
        ConfigPtr cfg(raw);
        apply_ablation(cfg.get(), v);
        trials.push_back({v, std::move(cfg)});
    }
    return run_trials(a, trials, "variant", "ablation.csv");
}

bool is_number(const std::string& text) {
    if (text.empty()) return false;
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(text.c_str(), &end);
    return errno == 0 && end == text.c_str() + text.size() && std::isfinite(v);
}

int run_sweep(const ExperimentArgs& a, const std::string& param, const std::vector<std::string>& values) {
    for (const auto& v : values)
        if (!is_number(v)) throw UsageError("--values: '" + v + "' is not a number");
    auto base = experiment_config(a);
    // Rejects unknown parameters before any training starts.
    {
        memaae_config* raw = nullptr;
        check(memaae_config_clone(base.get(), &raw), "copying config");
        ConfigPtr probe(raw);
        set_key(probe.get(), param, values.front());
    }
    std::vector<Trial> trials;
    for (const auto& v : values) {
        memaae_config* raw = nullptr;
        check(memaae_config_clone(base.get(), &raw), "copying config");
        ConfigPtr cfg(raw);
        set_key(cfg.get(), param, v);
        trials.push_back({param + "=" + v, std::move(cfg)});
    }
    return run_trials(a, trials, "value", "sweep.csv");
}

void add_experiment_options(CLI::App* cmd, ExperimentArgs& a) {
    cmd->add_option("--train-csv", a.train_csv, "Training series CSV")->required();
    cmd->add_option("--test-csv", a.test_csv, "Labeled test series CSV")->required();
    cmd->add_option("--config", a.config, "Config file (key = value lines)");
    cmd->add_option("--set", a.overrides, "Config override key=value (repeatable)");
    cmd->add_option("--labels", a.labels, "Label column name in the test CSV")->capture_default_str();
    cmd->add_option("--out-dir", a.out_dir, "Directory for per-trial artifacts")->capture_default_str();
    cmd->add_option("--epochs", a.epochs, "Override the configured epoch count");
    cmd->add_option("--seed", a.seed, "Override the configured seed");
    cmd->add_flag("--quiet", a.quiet, "Suppress per-epoch progress");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Memory-augmented adversarial autoencoder for time-series anomaly detection", "memaae"};
    app.require_subcommand(1);
    app.set_version_flag("--version", memaae_version());

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "Generate a labeled synthetic train/test pair");
    c_synth->add_option("--spec", synth.spec, "Anomaly spec file (default layout when omitted)");
    c_synth->add_option("--out", synth.out, "Output directory")->capture_default_str();
    c_synth->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();
    c_synth->add_option("--n-train", synth.n_train, "Training points")->capture_default_str();
    c_synth->add_option("--n-test", synth.n_test, "Test points")->capture_default_str();
    c_synth->add_option("--vars", synth.vars, "Number of variables")->capture_default_str();

    TrainArgs train;
    auto* c_train = app.add_subcommand("train", "Train a model and write a checkpoint");
    c_train->add_option("--train-csv", train.train_csv, "Training series CSV")->required();
    c_train->add_option("--config", train.config, "Config file (key = value lines)");
    c_train->add_option("--set", train.overrides, "Config override key=value (repeatable)");
    c_train->add_option("--out-checkpoint", train.checkpoint, "Checkpoint path")->required();
    c_train->add_option("--epochs", train.epochs, "Override the configured epoch count");
    c_train->add_option("--seed", train.seed, "Override the configured seed");
    c_train->add_option("--ablation", train.ablation, "Model variant")->check(CLI::IsMember(kAblations));
    c_train->add_option("--labels", train.labels, "Label column to ignore if present")->capture_default_str();
    c_train->add_flag("--quiet", train.quiet, "Suppress per-epoch progress");

    ScoreArgs score;
    auto* c_score = app.add_subcommand("score", "Write per-point anomaly scores");
    c_score->add_option("--checkpoint", score.checkpoint, "Checkpoint path")->required();
    c_score->add_option("--test-csv", score.test_csv, "Series to score")->required();
    c_score->add_option("--out", score.out, "Scores CSV")->capture_default_str();
    c_score->add_option("--labels", score.labels, "Label column to ignore if present")->capture_default_str();

    EvalArgs eval;
    auto* c_eval = app.add_subcommand("eval", "Score a labeled series and report point-adjusted best F1");
    c_eval->add_option("--checkpoint", eval.checkpoint, "Checkpoint path")->required();
    c_eval->add_option("--test-csv", eval.test_csv, "Labeled test series CSV")->required();
    c_eval->add_option("--labels", eval.labels, "Label column name")->capture_default_str();
    c_eval->add_option("--ablation", eval.ablation, "Expected model variant")->check(CLI::IsMember(kAblations));
    c_eval->add_option("--out-dir", eval.out_dir, "Directory for report.txt and scores.csv")->capture_default_str();

    ExperimentArgs ablate;
    std::vector<std::string> variants = kAblations;
    auto* c_ablate = app.add_subcommand("ablate", "Train and evaluate the full model and its ablations");
    add_experiment_options(c_ablate, ablate);
    c_ablate->add_option("--variants", variants, "Variants to run")
        ->delimiter(',')
        ->check(CLI::IsMember(kAblations))
        ->capture_default_str();

    ExperimentArgs sweep;
    std::string param;
    std::vector<std::string> values;
    auto* c_sweep = app.add_subcommand("sweep", "Train and evaluate once per value of one config key");
    add_experiment_options(c_sweep, sweep);
    c_sweep->add_option("--param", param, "Config key to vary, e.g. reconstruction_weight")->required();
    c_sweep->add_option("--values", values, "Comma-separated numeric values")->delimiter(',')->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*c_synth) return run_synth(synth);
        if (*c_train) return run_train(train);
        if (*c_score) return run_score(score);
        if (*c_eval) return run_eval(eval);
        if (*c_ablate) return run_ablate(ablate, variants);
        if (*c_sweep) return run_sweep(sweep, param, values);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}
