#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace memaae::data {

// N observations of K variables, row-major, with optional per-row anomaly labels.
struct RawSeries {
    std::size_t n = 0;
    std::size_t k = 0;
    std::vector<double> values;
    std::vector<std::string> names;
    std::optional<std::vector<bool>> labels;

    double at(std::size_t t, std::size_t j) const { return values[t * k + j]; }
    std::span<const double> row(std::size_t t) const { return {values.data() + t * k, k}; }

    // Throws unless the shape invariants hold.
    void validate() const;
};

struct NormalizationStats {
    std::vector<double> train_min;
    std::vector<double> train_max;
};

// Stride-1 sliding windows; window i covers timestamps [i, i+W-1].
struct WindowedDataset {
    std::size_t count = 0;
    std::size_t window = 0;
    std::size_t k = 0;
    std::vector<double> windows;  // count x window x k
    std::vector<std::size_t> end_index;

    std::span<const double> at(std::size_t i) const {
        return {windows.data() + i * window * k, window * k};
    }
};

RawSeries load_csv(const std::filesystem::path& path, const std::optional<std::string>& label_column = {});
RawSeries parse_csv(const std::string& text, const std::optional<std::string>& label_column = {},
                    const std::string& source = "<memory>");
void write_csv(const RawSeries& series, const std::filesystem::path& path, const std::string& label_column = "label");

NormalizationStats fit_normalize(const RawSeries& train);
RawSeries apply_normalize(const RawSeries& series, const NormalizationStats& stats);

WindowedDataset window(const RawSeries& series, std::size_t length);

}  // namespace memaae::data
