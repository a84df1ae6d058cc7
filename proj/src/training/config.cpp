#include "memaae/training/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "memaae/error.hpp"

namespace memaae::training {

namespace {

std::string trim(const std::string& s) {
    auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
    throw Error(ErrorKind::Config, "config key '" + key + "': '" + value + "' is not " + expected);
}

std::size_t parse_count(const std::string& key, const std::string& value) {
    std::size_t out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size() || value.empty())
        bad_value(key, value, "a non-negative integer");
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size() || value.empty())
        bad_value(key, value, "a non-negative integer");
    return out;
}

double parse_real(const std::string& key, const std::string& value) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size() || value.empty() || !std::isfinite(out))
        bad_value(key, value, "a finite number");
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    std::string v = canonical_key(value);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    bad_value(key, value, "a boolean");
}

std::vector<std::size_t> parse_list(const std::string& key, const std::string& value) {
    std::vector<std::size_t> out;
    std::istringstream in(value);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(parse_count(key, trim(item)));
    if (out.empty()) bad_value(key, value, "a comma-separated list of integers");
    return out;
}

std::string format_real(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

std::string canonical_key(const std::string& key) {
    std::string out;
    for (char ch : trim(key)) {
        if (ch == ' ' || ch == '-' || ch == '\t')
            ch = '_';
        else
            ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        if (ch == '_' && !out.empty() && out.back() == '_') continue;
        out.push_back(ch);
    }
    return out;
}

void TrainConfig::validate() const {
    model.validate();
    weights.validate();
    if (epochs > 0 && (batches_per_epoch == 0 || batch_size == 0))
        throw Error(ErrorKind::Config, "batches_per_epoch and batch_size must be >= 1");
    if (!std::isfinite(learning_rate) || learning_rate <= 0.0)
        throw Error(ErrorKind::Config, "learning_rate must be positive");
    if (!std::isfinite(clip_norm)) throw Error(ErrorKind::Config, "clip_norm must be finite");
}

std::vector<std::pair<std::string, std::string>> TrainConfig::to_kv() const {
    std::string channels;
    for (std::size_t i = 0; i < model.channels.size(); ++i)
        channels += (i ? "," : "") + std::to_string(model.channels[i]);
    return {
        {"window_size", std::to_string(model.window)},
        {"latent_size", std::to_string(model.latent)},
        {"memory_size", std::to_string(model.memory_slots)},
        {"pred_step", std::to_string(model.pred_steps)},
        {"reconstruction_weight", format_real(weights.lambda)},
        {"forward_prediction_weight", format_real(weights.gamma1)},
        {"backward_prediction_weight", format_real(weights.gamma2)},
        {"variables", std::to_string(model.n_vars)},
        {"hidden_size", std::to_string(model.hidden)},
        {"conv_channels", channels},
        {"kernel_size", std::to_string(model.kernel)},
        {"stride", std::to_string(model.stride)},
        {"padding", std::to_string(model.padding)},
        {"no_memory", model.no_memory ? "true" : "false"},
        {"no_prediction", model.no_prediction ? "true" : "false"},
        {"decay_weighting", decay == objective::DecayWeighting::Literal ? "literal" : "shifted"},
        {"score_horizon", score_horizon == ScoreHorizon::OneStep ? "one_step" : "full"},
        {"learning_rate", format_real(learning_rate)},
        {"epochs", std::to_string(epochs)},
        {"batches_per_epoch", std::to_string(batches_per_epoch)},
        {"batch_size", std::to_string(batch_size)},
        {"seed", std::to_string(seed)},
        {"clip_norm", format_real(clip_norm)},
    };
}

void TrainConfig::set(const std::string& raw_key, const std::string& raw_value) {
    const std::string key = canonical_key(raw_key);
    const std::string value = trim(raw_value);
    if (key == "window_size")
        model.window = parse_count(raw_key, value);
    else if (key == "latent_size")
        model.latent = parse_count(raw_key, value);
    else if (key == "memory_size")
        model.memory_slots = parse_count(raw_key, value);
    else if (key == "pred_step")
        model.pred_steps = parse_count(raw_key, value);
    else if (key == "reconstruction_weight")
        weights.lambda = parse_real(raw_key, value);
    else if (key == "forward_prediction_weight")
        weights.gamma1 = parse_real(raw_key, value);
    else if (key == "backward_prediction_weight")
        weights.gamma2 = parse_real(raw_key, value);
    else if (key == "variables")
        model.n_vars = parse_count(raw_key, value);
    else if (key == "hidden_size")
        model.hidden = parse_count(raw_key, value);
    else if (key == "conv_channels")
        model.channels = parse_list(raw_key, value);
    else if (key == "kernel_size")
        model.kernel = parse_count(raw_key, value);
    else if (key == "stride")
        model.stride = parse_count(raw_key, value);
    else if (key == "padding")
        model.padding = parse_count(raw_key, value);
    else if (key == "no_memory")
        model.no_memory = parse_bool(raw_key, value);
    else if (key == "no_prediction")
        model.no_prediction = parse_bool(raw_key, value);
    else if (key == "decay_weighting") {
        auto v = canonical_key(value);
        if (v == "literal")
            decay = objective::DecayWeighting::Literal;
        else if (v == "shifted")
            decay = objective::DecayWeighting::Shifted;
        else
            bad_value(raw_key, value, "'literal' or 'shifted'");
    } else if (key == "score_horizon") {
        auto v = canonical_key(value);
        if (v == "one_step")
            score_horizon = ScoreHorizon::OneStep;
        else if (v == "full")
            score_horizon = ScoreHorizon::Full;
        else
            bad_value(raw_key, value, "'one_step' or 'full'");
    } else if (key == "learning_rate")
        learning_rate = parse_real(raw_key, value);
    else if (key == "epochs")
        epochs = parse_count(raw_key, value);
    else if (key == "batches_per_epoch")
        batches_per_epoch = parse_count(raw_key, value);
    else if (key == "batch_size")
        batch_size = parse_count(raw_key, value);
    else if (key == "seed")
        seed = parse_u64(raw_key, value);
    else if (key == "clip_norm")
        clip_norm = parse_real(raw_key, value);
    else
        throw Error(ErrorKind::Config, "unknown config key '" + trim(raw_key) + "'");
}

TrainConfig parse_config(const std::string& text, TrainConfig base) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::Config, "config line " + std::to_string(line_no) + ": expected 'key = value'");
        base.set(line.substr(0, eq), line.substr(eq + 1));
    }
    base.validate();
    return base;
}

TrainConfig load_config(const std::filesystem::path& path, TrainConfig base) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open config " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), std::move(base));
}

std::string format_config(const TrainConfig& config) {
    std::ostringstream out;
    for (const auto& [key, value] : config.to_kv()) out << key << " = " << value << '\n';
    return out.str();
}

}  // namespace memaae::training
