#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "memaae/data/series.hpp"

namespace memaae::data {

enum class AnomalyKind { Point, Contextual, Collective };

const char* anomaly_kind_name(AnomalyKind kind);

// One injected segment. A negative magnitude selects the per-kind default:
//   point      - additive spike of `magnitude` x per-variable std (default 3),
//                signed away from the variable mean
//   contextual - local frequency multiplied by (1 + magnitude) (default 1),
//                clipped into the clean value range
//   collective - constant level at min + magnitude x (max - min) (default 0.5)
struct AnomalySegment {
    AnomalyKind kind = AnomalyKind::Point;
    std::size_t start = 0;
    std::size_t length = 1;
    double magnitude = -1.0;
};

using AnomalySpec = std::vector<AnomalySegment>;

// Text format: one segment per line, `kind start length [magnitude]`,
// `#` starts a comment.
AnomalySpec parse_anomaly_spec(const std::string& text);
AnomalySpec load_anomaly_spec(const std::filesystem::path& path);
std::string format_anomaly_spec(const AnomalySpec& spec);

struct SynthOptions {
    double noise_std = 0.02;
};

// Sum-of-sinusoids series with Gaussian noise and the given anomalies injected.
// Labels mark exactly the injected indices.
RawSeries synth(std::uint64_t seed, std::size_t n_points, std::size_t n_vars, const AnomalySpec& spec,
                const SynthOptions& options = {});

// Contiguous train/test split of one generated signal; `spec` positions are
// relative to the start of the test part, and the train part stays clean.
std::pair<RawSeries, RawSeries> synth_pair(std::uint64_t seed, std::size_t n_train, std::size_t n_test,
                                           std::size_t n_vars, const AnomalySpec& spec,
                                           const SynthOptions& options = {});

// Segments used by the bundled benchmark: 6 point, 3 contextual and 3
// collective anomalies spread over a test series of `n_test` points.
AnomalySpec default_anomaly_spec(std::size_t n_test);

}  // namespace memaae::data
