#include "memaae/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "memaae/error.hpp"
#include "memaae/numcore/rng.hpp"

namespace memaae::data {

const char* anomaly_kind_name(AnomalyKind kind) {
    switch (kind) {
        case AnomalyKind::Point: return "point";
        case AnomalyKind::Contextual: return "contextual";
        case AnomalyKind::Collective: return "collective";
    }
    return "?";
}

AnomalySpec parse_anomaly_spec(const std::string& text) {
    AnomalySpec spec;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        std::string kind;
        if (!(fields >> kind)) continue;
        AnomalySegment seg;
        if (kind == "point")
            seg.kind = AnomalyKind::Point;
        else if (kind == "contextual")
            seg.kind = AnomalyKind::Contextual;
        else if (kind == "collective")
            seg.kind = AnomalyKind::Collective;
        else
            throw Error(ErrorKind::Parse, "anomaly spec line " + std::to_string(line_no) + ": unknown kind '" +
                                              kind + "'");
        long long start = -1, length = -1;
        if (!(fields >> start >> length) || start < 0 || length < 1)
            throw Error(ErrorKind::Parse, "anomaly spec line " + std::to_string(line_no) +
                                              ": expected non-negative start and positive length");
        seg.start = static_cast<std::size_t>(start);
        seg.length = static_cast<std::size_t>(length);
        if (double magnitude; fields >> magnitude) {
            if (!std::isfinite(magnitude) || magnitude < 0.0)
                throw Error(ErrorKind::Parse,
                            "anomaly spec line " + std::to_string(line_no) + ": magnitude must be finite and >= 0");
            seg.magnitude = magnitude;
        } else if (!fields.eof()) {
            throw Error(ErrorKind::Parse, "anomaly spec line " + std::to_string(line_no) + ": bad magnitude");
        }
        if (std::string extra; fields.clear(), fields >> extra)
            throw Error(ErrorKind::Parse, "anomaly spec line " + std::to_string(line_no) + ": trailing field '" +
                                              extra + "'");
        spec.push_back(seg);
    }
    return spec;
}

AnomalySpec load_anomaly_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open anomaly spec " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_anomaly_spec(buffer.str());
}

std::string format_anomaly_spec(const AnomalySpec& spec) {
    std::ostringstream out;
    out << "# kind start length [magnitude]\n";
    for (const auto& seg : spec) {
        out << anomaly_kind_name(seg.kind) << ' ' << seg.start << ' ' << seg.length;
        if (seg.magnitude >= 0.0) out << ' ' << seg.magnitude;
        out << '\n';
    }
    return out.str();
}

namespace {

struct Component {
    double amplitude, period, phase;
};

struct VariableShape {
    double offset;
    Component fast, slow;

    double operator()(double t) const {
        constexpr double tau = 2.0 * std::numbers::pi;
        return offset + fast.amplitude * std::sin(tau * t / fast.period + fast.phase) +
               slow.amplitude * std::sin(tau * t / slow.period + slow.phase);
    }
};

void check_segments(const AnomalySpec& spec, std::size_t offset, std::size_t n_points) {
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    for (const auto& seg : spec) {
        if (seg.length == 0) throw Error(ErrorKind::Argument, "anomaly segment with zero length");
        if (offset + seg.start + seg.length > n_points)
            throw Error(ErrorKind::Argument, std::string(anomaly_kind_name(seg.kind)) + " segment at " +
                                                 std::to_string(seg.start) + " runs past the series end");
        ranges.emplace_back(seg.start, seg.start + seg.length);
    }
    std::sort(ranges.begin(), ranges.end());
    for (std::size_t i = 1; i < ranges.size(); ++i)
        if (ranges[i].first < ranges[i - 1].second)
            throw Error(ErrorKind::Argument, "anomaly segments starting at " + std::to_string(ranges[i - 1].first) +
                                                 " and " + std::to_string(ranges[i].first) + " overlap");
}

RawSeries generate(std::uint64_t seed, std::size_t n_points, std::size_t n_vars, const AnomalySpec& spec,
                   std::size_t spec_offset, const SynthOptions& options) {
    if (n_points == 0 || n_vars == 0) throw Error(ErrorKind::Argument, "synth needs n_points and n_vars >= 1");
    check_segments(spec, spec_offset, n_points);

    nc::Rng rng(seed);
    std::vector<VariableShape> shapes;
    constexpr double tau = 2.0 * std::numbers::pi;
    for (std::size_t j = 0; j < n_vars; ++j) {
        VariableShape s;
        s.offset = rng.uniform(-0.5, 0.5);
        s.fast = {rng.uniform(0.6, 1.0), rng.uniform(24.0, 48.0), rng.uniform(0.0, tau)};
        s.slow = {rng.uniform(0.2, 0.4), rng.uniform(60.0, 120.0), rng.uniform(0.0, tau)};
        shapes.push_back(s);
    }

    RawSeries out;
    out.n = n_points;
    out.k = n_vars;
    out.values.resize(n_points * n_vars);
    for (std::size_t j = 0; j < n_vars; ++j) out.names.push_back("x" + std::to_string(j));
    std::vector<double> noise(n_points * n_vars);
    for (auto& v : noise) v = rng.normal(0.0, options.noise_std);
    for (std::size_t t = 0; t < n_points; ++t)
        for (std::size_t j = 0; j < n_vars; ++j)
            out.values[t * n_vars + j] = shapes[j](static_cast<double>(t)) + noise[t * n_vars + j];

    std::vector<double> lo(n_vars), hi(n_vars), mu(n_vars), sd(n_vars);
    for (std::size_t j = 0; j < n_vars; ++j) {
        double s = 0.0, s2 = 0.0;
        lo[j] = hi[j] = out.at(0, j);
        for (std::size_t t = 0; t < n_points; ++t) {
            double v = out.at(t, j);
            lo[j] = std::min(lo[j], v);
            hi[j] = std::max(hi[j], v);
            s += v;
        }
        mu[j] = s / static_cast<double>(n_points);
        for (std::size_t t = 0; t < n_points; ++t) s2 += (out.at(t, j) - mu[j]) * (out.at(t, j) - mu[j]);
        sd[j] = std::sqrt(s2 / static_cast<double>(n_points));
    }

    std::vector<bool> labels(n_points, false);
    for (const auto& seg : spec) {
        std::size_t first = spec_offset + seg.start;
        for (std::size_t t = first; t < first + seg.length; ++t) {
            labels[t] = true;
            for (std::size_t j = 0; j < n_vars; ++j) {
                double& v = out.values[t * n_vars + j];
                switch (seg.kind) {
                    case AnomalyKind::Point: {
                        double mag = seg.magnitude >= 0.0 ? seg.magnitude : 3.0;
                        v += (v >= mu[j] ? 1.0 : -1.0) * mag * sd[j];
                        break;
                    }
                    case AnomalyKind::Contextual: {
                        double factor = 1.0 + (seg.magnitude >= 0.0 ? seg.magnitude : 1.0);
                        double warped = static_cast<double>(first) + static_cast<double>(t - first) * factor;
                        v = std::clamp(shapes[j](warped) + noise[t * n_vars + j], lo[j], hi[j]);
                        break;
                    }
                    case AnomalyKind::Collective: {
                        double level = std::clamp(seg.magnitude >= 0.0 ? seg.magnitude : 0.5, 0.0, 1.0);
                        v = lo[j] + level * (hi[j] - lo[j]);
                        break;
                    }
                }
            }
        }
    }
    out.labels = std::move(labels);
    return out;
}

}  // namespace

RawSeries synth(std::uint64_t seed, std::size_t n_points, std::size_t n_vars, const AnomalySpec& spec,
                const SynthOptions& options) {
    return generate(seed, n_points, n_vars, spec, 0, options);
}

std::pair<RawSeries, RawSeries> synth_pair(std::uint64_t seed, std::size_t n_train, std::size_t n_test,
                                           std::size_t n_vars, const AnomalySpec& spec, const SynthOptions& options) {
    if (n_train == 0 || n_test == 0) throw Error(ErrorKind::Argument, "synth_pair needs non-empty train and test");
    RawSeries full = generate(seed, n_train + n_test, n_vars, spec, n_train, options);
    auto split = [&](std::size_t first, std::size_t count) {
        RawSeries part;
        part.n = count;
        part.k = n_vars;
        part.names = full.names;
        auto begin = full.values.begin() + static_cast<std::ptrdiff_t>(first * n_vars);
        part.values.assign(begin, begin + static_cast<std::ptrdiff_t>(count * n_vars));
        auto lb = full.labels->begin() + static_cast<std::ptrdiff_t>(first);
        part.labels = std::vector<bool>(lb, lb + static_cast<std::ptrdiff_t>(count));
        return part;
    };
    return {split(0, n_train), split(n_train, n_test)};
}

AnomalySpec default_anomaly_spec(std::size_t n_test) {
    static constexpr AnomalyKind pattern[] = {
        AnomalyKind::Point,      AnomalyKind::Contextual, AnomalyKind::Point,      AnomalyKind::Collective,
        AnomalyKind::Point,      AnomalyKind::Contextual, AnomalyKind::Point,      AnomalyKind::Collective,
        AnomalyKind::Point,      AnomalyKind::Contextual, AnomalyKind::Point,      AnomalyKind::Collective,
    };
    constexpr std::size_t count = std::size(pattern);
    std::size_t spacing = n_test / (count + 1);
    if (spacing < 8) throw Error(ErrorKind::Argument, "test series too short for the default anomaly layout");
    std::size_t span = std::min<std::size_t>(30, spacing / 3);
    AnomalySpec spec;
    for (std::size_t i = 0; i < count; ++i) {
        AnomalySegment seg;
        seg.kind = pattern[i];
        seg.start = (i + 1) * spacing;
        seg.length = seg.kind == AnomalyKind::Point ? 1 : span;
        spec.push_back(seg);
    }
    return spec;
}

}  // namespace memaae::data
