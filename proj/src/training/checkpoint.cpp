// Checkpoint container, little-endian throughout:
//
//   magic   "MEMAAECK"                       8 bytes
//   version u32                              (currently 1)
//   manifest: u32 count, then count x (str key, str value)
//   blocks:   u32 count, then count x (str name, u32 rank, rank x u64 dim, f64 values)
//
// where str = u32 length + bytes. Parameter blocks come first in declaration
// order; normalization stats, when present, follow as "norm.min" / "norm.max".

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "memaae/error.hpp"
#include "memaae/training/trainer.hpp"

namespace memaae::training {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'M', 'E', 'M', 'A', 'A', 'E', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
    template <class T>
    void pod(const T& v) {
        out_.append(reinterpret_cast<const char*>(&v), sizeof v);
    }
    void str(const std::string& s) {
        pod(static_cast<std::uint32_t>(s.size()));
        out_.append(s);
    }
    void raw(const void* data, std::size_t bytes) { out_.append(static_cast<const char*>(data), bytes); }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class Reader {
public:
    Reader(const std::string& bytes, std::string source) : bytes_(bytes), source_(std::move(source)) {}

    template <class T>
    T pod(const char* what) {
        T v;
        need(sizeof v, what);
        std::memcpy(&v, bytes_.data() + pos_, sizeof v);
        pos_ += sizeof v;
        return v;
    }
    std::string str(const char* what) {
        auto n = pod<std::uint32_t>(what);
        need(n, what);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    void raw(void* dst, std::size_t bytes, const char* what) {
        need(bytes, what);
        std::memcpy(dst, bytes_.data() + pos_, bytes);
        pos_ += bytes;
    }
    bool at_end() const { return pos_ == bytes_.size(); }
    const std::string& source() const { return source_; }

private:
    void need(std::size_t n, const char* what) {
        if (bytes_.size() - pos_ < n)
            throw Error(ErrorKind::Checkpoint, source_ + ": truncated while reading " + what);
    }

    const std::string& bytes_;
    std::string source_;
    std::size_t pos_ = 0;
};

struct Block {
    std::string name;
    nc::Shape shape;
    std::vector<double> values;
};

void write_block(Writer& w, const std::string& name, const nc::Shape& shape, std::span<const double> values) {
    w.str(name);
    w.pod(static_cast<std::uint32_t>(shape.size()));
    for (auto d : shape) w.pod(static_cast<std::uint64_t>(d));
    w.raw(values.data(), values.size() * sizeof(double));
}

struct Parsed {
    std::vector<std::pair<std::string, std::string>> manifest;
    std::vector<Block> blocks;
};

Parsed parse(const std::string& bytes, const std::string& source) {
    Reader r(bytes, source);
    char magic[8];
    r.raw(magic, sizeof magic, "magic");
    if (std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw Error(ErrorKind::Checkpoint, source + ": not a checkpoint file");
    auto version = r.pod<std::uint32_t>("version");
    if (version != kVersion)
        throw Error(ErrorKind::Checkpoint, source + ": unsupported checkpoint version " + std::to_string(version) +
                                               " (expected " + std::to_string(kVersion) + ")");
    Parsed out;
    auto entries = r.pod<std::uint32_t>("manifest size");
    for (std::uint32_t i = 0; i < entries; ++i) {
        auto key = r.str("manifest key");
        auto value = r.str("manifest value");
        out.manifest.emplace_back(std::move(key), std::move(value));
    }
    auto blocks = r.pod<std::uint32_t>("block count");
    for (std::uint32_t i = 0; i < blocks; ++i) {
        Block b;
        b.name = r.str("block name");
        auto rank = r.pod<std::uint32_t>("block rank");
        if (rank == 0 || rank > 8) throw Error(ErrorKind::Checkpoint, source + ": block '" + b.name + "' has bad rank");
        std::size_t count = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            auto dim = r.pod<std::uint64_t>("block shape");
            if (dim == 0 || dim > (std::uint64_t{1} << 32))
                throw Error(ErrorKind::Checkpoint, source + ": block '" + b.name + "' has bad shape");
            b.shape.push_back(static_cast<std::size_t>(dim));
            count *= static_cast<std::size_t>(dim);
        }
        b.values.resize(count);
        r.raw(b.values.data(), count * sizeof(double), "block values");
        out.blocks.push_back(std::move(b));
    }
    if (!r.at_end()) throw Error(ErrorKind::Checkpoint, source + ": trailing bytes after last block");
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open checkpoint " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

// Copies the parsed parameter blocks into `bundle`, validating names and shapes.
void assign(ModelBundle& bundle, Parsed& parsed, const std::string& source) {
    auto& params = bundle.model.parameters();
    std::size_t expected = params.size();
    std::size_t extra = parsed.blocks.size() >= expected ? parsed.blocks.size() - expected : 0;
    for (std::size_t i = 0; i < std::min(expected, parsed.blocks.size()); ++i) {
        const auto& block = parsed.blocks[i];
        const auto& [name, tensor] = params[i];
        if (block.name != name)
            throw Error(ErrorKind::Checkpoint,
                        source + ": block " + std::to_string(i) + " is '" + block.name + "', expected '" + name + "'");
        if (block.shape != tensor.shape())
            throw Error(ErrorKind::Shape, source + ": block '" + name + "' has shape " + nc::shape_str(block.shape) +
                                              ", model expects " + nc::shape_str(tensor.shape()));
    }
    if (parsed.blocks.size() < expected)
        throw Error(ErrorKind::Checkpoint, source + ": has " + std::to_string(parsed.blocks.size()) +
                                               " blocks, model needs " + std::to_string(expected));
    std::optional<data::NormalizationStats> stats;
    if (extra == 2 && parsed.blocks[expected].name == "norm.min" && parsed.blocks[expected + 1].name == "norm.max") {
        stats.emplace();
        stats->train_min = parsed.blocks[expected].values;
        stats->train_max = parsed.blocks[expected + 1].values;
        if (stats->train_min.size() != bundle.config.model.n_vars || stats->train_max.size() != stats->train_min.size())
            throw Error(ErrorKind::Shape, source + ": normalization blocks do not match the variable count");
    } else if (extra != 0) {
        throw Error(ErrorKind::Checkpoint, source + ": unexpected trailing blocks");
    }
    // Validation is complete; nothing is modified before this point.
    for (std::size_t i = 0; i < expected; ++i) {
        auto dst = params[i].tensor.values();
        std::copy(parsed.blocks[i].values.begin(), parsed.blocks[i].values.end(), dst.begin());
        params[i].tensor.zero_grad();
    }
    bundle.stats = std::move(stats);
}

}  // namespace

std::string serialize_checkpoint(const ModelBundle& bundle) {
    Writer w;
    w.raw(kMagic, sizeof kMagic);
    w.pod(kVersion);
    auto manifest = bundle.config.to_kv();
    w.pod(static_cast<std::uint32_t>(manifest.size()));
    for (const auto& [key, value] : manifest) {
        w.str(key);
        w.str(value);
    }
    const auto& params = bundle.model.parameters();
    w.pod(static_cast<std::uint32_t>(params.size() + (bundle.stats ? 2 : 0)));
    for (const auto& [name, tensor] : params) write_block(w, name, tensor.shape(), tensor.values());
    if (bundle.stats) {
        const auto& s = *bundle.stats;
        write_block(w, "norm.min", {s.train_min.size()}, s.train_min);
        write_block(w, "norm.max", {s.train_max.size()}, s.train_max);
    }
    return w.take();
}

ModelBundle deserialize_checkpoint(const std::string& bytes, const std::string& source) {
    Parsed parsed = parse(bytes, source);
    TrainConfig config;
    try {
        for (const auto& [key, value] : parsed.manifest) config.set(key, value);
        config.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::Checkpoint, source + ": invalid manifest: " + e.what());
    }
    ModelBundle bundle(config);
    assign(bundle, parsed, source);
    return bundle;
}

void save_checkpoint(const ModelBundle& bundle, const std::filesystem::path& path) {
    std::string bytes = serialize_checkpoint(bundle);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write checkpoint " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::Io, "write failed for checkpoint " + path.string());
}

ModelBundle load_checkpoint(const std::filesystem::path& path) {
    return deserialize_checkpoint(read_file(path), path.string());
}

void load_parameters(ModelBundle& bundle, const std::filesystem::path& path) {
    Parsed parsed = parse(read_file(path), path.string());
    assign(bundle, parsed, path.string());
}

}  // namespace memaae::training
