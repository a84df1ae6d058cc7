#include "memaae/data/series.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "memaae/error.hpp"

namespace memaae::data {

void RawSeries::validate() const {
    if (n == 0 || k == 0) throw Error(ErrorKind::Shape, "series needs at least one row and one variable");
    if (values.size() != n * k) throw Error(ErrorKind::Shape, "series values do not match N x K");
    if (!names.empty() && names.size() != k) throw Error(ErrorKind::Shape, "series has wrong number of names");
    if (labels && labels->size() != n) throw Error(ErrorKind::Shape, "label count differs from row count");
}

namespace {

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        auto first = cell.find_first_not_of(" \t\r");
        auto last = cell.find_last_not_of(" \t\r");
        cells.push_back(first == std::string::npos ? std::string{} : cell.substr(first, last - first + 1));
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string where(const std::string& source, std::size_t row, std::size_t col) {
    return source + ": row " + std::to_string(row) + ", column " + std::to_string(col + 1);
}

}  // namespace

RawSeries parse_csv(const std::string& text, const std::optional<std::string>& label_column,
                    const std::string& source) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        header = split_row(line);
        break;
    }
    if (header.empty()) throw Error(ErrorKind::Parse, source + ": missing header row");
    if (line_no == 1 && header[0].size() >= 3 && header[0].compare(0, 3, "\xEF\xBB\xBF") == 0)
        header[0].erase(0, 3);

    std::optional<std::size_t> label_index;
    if (label_column) {
        auto it = std::find(header.begin(), header.end(), *label_column);
        if (it == header.end())
            throw Error(ErrorKind::Parse, source + ": label column '" + *label_column + "' not in header");
        label_index = static_cast<std::size_t>(it - header.begin());
    }

    RawSeries series;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (c != label_index) series.names.push_back(header[c]);
    series.k = series.names.size();
    if (series.k == 0) throw Error(ErrorKind::Parse, source + ": no value columns");
    if (label_index) series.labels.emplace();

    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto cells = split_row(line);
        if (cells.size() != header.size())
            throw Error(ErrorKind::Parse, source + ": row " + std::to_string(line_no) + " has " +
                                              std::to_string(cells.size()) + " cells, header has " +
                                              std::to_string(header.size()));
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto& cell = cells[c];
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            bool ok = ec == std::errc{} && ptr == cell.data() + cell.size() && !cell.empty() && std::isfinite(v);
            if (c == label_index) {
                if (!ok || (v != 0.0 && v != 1.0))
                    throw Error(ErrorKind::Parse, where(source, line_no, c) + ": label '" + cell + "' is not 0 or 1");
                series.labels->push_back(v == 1.0);
            } else {
                if (!ok)
                    throw Error(ErrorKind::Parse,
                                where(source, line_no, c) + ": cell '" + cell + "' is not a finite number");
                series.values.push_back(v);
            }
        }
        ++series.n;
    }
    if (series.n == 0) throw Error(ErrorKind::Parse, source + ": no data rows");
    return series;
}

RawSeries load_csv(const std::filesystem::path& path, const std::optional<std::string>& label_column) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_csv(buffer.str(), label_column, path.string());
}

void write_csv(const RawSeries& series, const std::filesystem::path& path, const std::string& label_column) {
    series.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    for (std::size_t j = 0; j < series.k; ++j) {
        if (j) out << ',';
        out << (series.names.empty() ? "x" + std::to_string(j) : series.names[j]);
    }
    if (series.labels) out << ',' << label_column;
    out << '\n';
    out << std::setprecision(17);
    for (std::size_t t = 0; t < series.n; ++t) {
        for (std::size_t j = 0; j < series.k; ++j) {
            if (j) out << ',';
            out << series.at(t, j);
        }
        if (series.labels) out << ',' << ((*series.labels)[t] ? 1 : 0);
        out << '\n';
    }
    if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

NormalizationStats fit_normalize(const RawSeries& train) {
    train.validate();
    NormalizationStats stats;
    stats.train_min.assign(train.k, 0.0);
    stats.train_max.assign(train.k, 0.0);
    for (std::size_t j = 0; j < train.k; ++j) {
        double lo = train.at(0, j), hi = lo;
        for (std::size_t t = 1; t < train.n; ++t) {
            lo = std::min(lo, train.at(t, j));
            hi = std::max(hi, train.at(t, j));
        }
        stats.train_min[j] = lo;
        stats.train_max[j] = hi;
    }
    return stats;
}

RawSeries apply_normalize(const RawSeries& series, const NormalizationStats& stats) {
    series.validate();
    if (stats.train_min.size() != series.k || stats.train_max.size() != series.k)
        throw Error(ErrorKind::Shape, "normalization stats have " + std::to_string(stats.train_min.size()) +
                                          " variables, series has " + std::to_string(series.k));
    RawSeries out = series;
    for (std::size_t j = 0; j < series.k; ++j) {
        double range = stats.train_max[j] - stats.train_min[j];
        // Degenerate column: denominator clamped to 1.
        double denom = range > 0.0 ? range : 1.0;
        for (std::size_t t = 0; t < series.n; ++t)
            out.values[t * series.k + j] = (series.at(t, j) - stats.train_min[j]) / denom;
    }
    return out;
}

WindowedDataset window(const RawSeries& series, std::size_t length) {
    series.validate();
    if (length == 0) throw Error(ErrorKind::Argument, "window length must be positive");
    if (length > series.n)
        throw Error(ErrorKind::Argument, "window length " + std::to_string(length) + " exceeds series length " +
                                             std::to_string(series.n));
    WindowedDataset ds;
    ds.count = series.n - length + 1;
    ds.window = length;
    ds.k = series.k;
    ds.windows.reserve(ds.count * length * series.k);
    for (std::size_t i = 0; i < ds.count; ++i) {
        auto first = series.values.begin() + static_cast<std::ptrdiff_t>(i * series.k);
        ds.windows.insert(ds.windows.end(), first, first + static_cast<std::ptrdiff_t>(length * series.k));
        ds.end_index.push_back(i + length - 1);
    }
    return ds;
}

}  // namespace memaae::data
