#include "memaae/model/memaae.hpp"

#include <cmath>

#include "memaae/error.hpp"
#include "memaae/numcore/rng.hpp"

namespace memaae::model {

using namespace memaae::nc;

std::size_t ModelConfig::latent_length() const {
    std::size_t length = window;
    for (std::size_t i = 0; i < channels.size(); ++i) length = conv1d_output_length(length, kernel, stride, padding);
    return length;
}

void ModelConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::Config, msg); };
    if (window == 0 || n_vars == 0 || latent == 0 || memory_slots == 0 || pred_steps == 0 || hidden == 0)
        fail("window, variables, latent size, memory size, pred step and hidden size must all be >= 1");
    if (channels.empty()) fail("at least one convolution layer is required");
    for (auto c : channels)
        if (c == 0) fail("convolution channels must be >= 1");
    if (kernel == 0 || stride == 0) fail("kernel and stride must be >= 1");
    std::size_t length = 0;
    try {
        length = latent_length();
        for (std::size_t i = 0; i < channels.size(); ++i)
            length = conv_transpose1d_output_length(length, kernel, stride, padding);
    } catch (const Error& e) {
        fail(std::string("window ") + std::to_string(window) + " does not fit the conv stack: " + e.what());
    }
    if (length != window)
        fail("decoder output length " + std::to_string(length) + " differs from window " + std::to_string(window) +
             "; choose a window divisible by stride^layers");
}

MemAAE::MemAAE(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
    config_.validate();
    const auto& c = config_;
    const std::size_t L = c.latent_length();

    std::size_t in = c.n_vars;
    for (std::size_t i = 0; i < c.channels.size(); ++i) {
        encoder_convs_.push_back(add_conv("encoder.conv" + std::to_string(i), in, c.channels[i], c.kernel, false));
        in = c.channels[i];
    }
    encoder_out_ = add_affine("encoder.out", c.channels.back(), c.latent);

    memory_ = add_param("memory.slots", {c.memory_slots, c.latent});
    projection_ = add_affine("memory.projection", c.latent, c.memory_slots);

    decoder_in_ = add_affine("decoder.in", c.latent, c.channels.back());
    for (std::size_t i = c.channels.size(); i-- > 0;) {
        std::size_t out = i == 0 ? c.n_vars : c.channels[i - 1];
        decoder_convs_.push_back(add_conv("decoder.deconv" + std::to_string(c.channels.size() - 1 - i),
                                          c.channels[i], out, c.kernel, true));
    }

    in = c.n_vars;
    for (std::size_t i = 0; i < c.channels.size(); ++i) {
        disc_convs_.push_back(
            add_conv("discriminator.conv" + std::to_string(i), in, c.channels[i], c.kernel, false));
        in = c.channels[i];
    }
    disc_out_ = add_affine("discriminator.out", c.channels.back() * L, 1);

    forward_ = add_predictor("predictor.forward");
    backward_ = add_predictor("predictor.backward");

    initialize(seed);
}

std::size_t MemAAE::add_param(std::string name, Shape shape) {
    params_.push_back({std::move(name), Tensor::zeros(std::move(shape), true)});
    return params_.size() - 1;
}

MemAAE::Conv MemAAE::add_conv(const std::string& prefix, std::size_t in, std::size_t out, std::size_t kernel,
                              bool transposed) {
    Conv conv{};
    conv.weight = add_param(prefix + ".weight", transposed ? Shape{in, out, kernel} : Shape{out, in, kernel});
    conv.bias = add_param(prefix + ".bias", {out, 1});
    return conv;
}

MemAAE::Affine MemAAE::add_affine(const std::string& prefix, std::size_t in, std::size_t out) {
    Affine a{};
    a.weight = add_param(prefix + ".weight", {in, out});
    a.bias = add_param(prefix + ".bias", {out});
    return a;
}

MemAAE::Predictor MemAAE::add_predictor(const std::string& prefix) {
    const auto& c = config_;
    Predictor p{};
    p.input_gates = add_param(prefix + ".lstm.input_weight", {c.latent, 4 * c.hidden});
    p.hidden_gates = add_param(prefix + ".lstm.hidden_weight", {c.hidden, 4 * c.hidden});
    p.gate_bias = add_param(prefix + ".lstm.bias", {4 * c.hidden});
    p.fc1 = add_affine(prefix + ".fc1", c.hidden, c.hidden);
    p.fc2 = add_affine(prefix + ".fc2", c.hidden, c.pred_steps * c.n_vars);
    return p;
}

void MemAAE::initialize(std::uint64_t seed) {
    Rng rng(seed);
    for (auto& [name, tensor] : params_) {
        auto values = tensor.values();
        const auto& shape = tensor.shape();
        auto ends_with = [&](const std::string& suffix) {
            return name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
        };
        double bound = 0.0;
        if (name == "memory.slots") {
            bound = 1.0 / std::sqrt(static_cast<double>(config_.latent));
        } else if (name.find(".lstm.") != std::string::npos) {
            bound = 1.0 / std::sqrt(static_cast<double>(config_.hidden));
        } else if (ends_with(".bias")) {
            bound = 0.0;
        } else if (shape.size() == 3) {
            // conv: (out, in, k); transposed conv: (in, out, k). Fan-in is dim 1 x k either way.
            bound = 1.0 / std::sqrt(static_cast<double>(shape[1] * shape[2]));
        } else {
            bound = 1.0 / std::sqrt(static_cast<double>(shape[0]));
        }
        for (double& v : values) v = bound > 0.0 ? rng.uniform(-bound, bound) : 0.0;
    }
}

Tensor& MemAAE::parameter(const std::string& name) {
    for (auto& p : params_)
        if (p.name == name) return p.tensor;
    throw Error(ErrorKind::Argument, "no parameter named '" + name + "'");
}

const Tensor& MemAAE::parameter(const std::string& name) const {
    return const_cast<MemAAE*>(this)->parameter(name);
}

// --- forward pieces ---------------------------------------------------------

Tensor MemAAE::conv_stack(const Tensor& x, const std::vector<Conv>& layers) const {
    const auto& c = config_;
    Tensor h = permute(x, {0, 2, 1});  // (B, K, W)
    for (const auto& layer : layers)
        h = relu(add(conv1d(h, params_[layer.weight].tensor, c.stride, c.padding), params_[layer.bias].tensor));
    return h;  // (B, C_last, L)
}

Tensor MemAAE::affine(const Tensor& x, const Affine& layer) const {
    return add(matmul(x, params_[layer.weight].tensor), params_[layer.bias].tensor);
}

Tensor MemAAE::encode(const Tensor& x) const {
    const auto& c = config_;
    if (x.rank() != 3 || x.dim(1) != c.window || x.dim(2) != c.n_vars)
        throw Error(ErrorKind::Shape, "encode: expected (batch, " + std::to_string(c.window) + ", " +
                                          std::to_string(c.n_vars) + "), got " + shape_str(x.shape()));
    const std::size_t batch = x.dim(0), L = c.latent_length();
    Tensor h = permute(conv_stack(x, encoder_convs_), {0, 2, 1});  // (B, L, C)
    h = reshape(h, {batch * L, c.channels.back()});
    return reshape(affine(h, encoder_out_), {batch, L, c.latent});
}

MemoryRead MemAAE::memory_read(const Tensor& z) const {
    const auto& c = config_;
    if (z.rank() != 3 || z.dim(2) != c.latent)
        throw Error(ErrorKind::Shape, "memory_read: expected (batch, L, " + std::to_string(c.latent) + "), got " +
                                          shape_str(z.shape()));
    if (c.no_memory) return {Tensor{}, z};
    const std::size_t rows = z.dim(0) * z.dim(1);
    Tensor queries = reshape(z, {rows, c.latent});
    Tensor weights = softmax(affine(queries, projection_), 1);
    Tensor latent = matmul(weights, params_[memory_].tensor);
    return {reshape(weights, {z.dim(0), z.dim(1), c.memory_slots}), reshape(latent, {z.dim(0), z.dim(1), c.latent})};
}

Tensor MemAAE::decode(const Tensor& latent) const {
    const auto& c = config_;
    const std::size_t L = c.latent_length();
    if (latent.rank() != 3 || latent.dim(1) != L || latent.dim(2) != c.latent)
        throw Error(ErrorKind::Shape, "decode: expected (batch, " + std::to_string(L) + ", " +
                                          std::to_string(c.latent) + "), got " + shape_str(latent.shape()));
    const std::size_t batch = latent.dim(0);
    Tensor h = relu(affine(reshape(latent, {batch * L, c.latent}), decoder_in_));
    h = permute(reshape(h, {batch, L, c.channels.back()}), {0, 2, 1});  // (B, C, L)
    for (std::size_t i = 0; i < decoder_convs_.size(); ++i) {
        const auto& layer = decoder_convs_[i];
        h = add(conv_transpose1d(h, params_[layer.weight].tensor, c.stride, c.padding), params_[layer.bias].tensor);
        if (i + 1 < decoder_convs_.size()) h = relu(h);
    }
    return permute(h, {0, 2, 1});  // (B, W, K)
}

Tensor MemAAE::discriminate(const Tensor& x) const {
    const auto& c = config_;
    if (x.rank() != 3 || x.dim(1) != c.window || x.dim(2) != c.n_vars)
        throw Error(ErrorKind::Shape, "discriminate: expected window-shaped input, got " + shape_str(x.shape()));
    const std::size_t batch = x.dim(0);
    Tensor h = conv_stack(x, disc_convs_);
    h = reshape(h, {batch, c.channels.back() * c.latent_length()});
    return sigmoid(affine(h, disc_out_));
}

Tensor MemAAE::run_predictor(const Tensor& latent, const Predictor& p, bool reversed) const {
    const auto& c = config_;
    if (latent.rank() != 3 || latent.dim(2) != c.latent)
        throw Error(ErrorKind::Shape, "predict: expected (batch, L, " + std::to_string(c.latent) + "), got " +
                                          shape_str(latent.shape()));
    const std::size_t batch = latent.dim(0), L = latent.dim(1), H = c.hidden;
    const Tensor& wx = params_[p.input_gates].tensor;
    const Tensor& wh = params_[p.hidden_gates].tensor;
    const Tensor& bias = params_[p.gate_bias].tensor;
    Tensor h, cell;
    for (std::size_t step = 0; step < L; ++step) {
        std::size_t pos = reversed ? L - 1 - step : step;
        Tensor x = reshape(slice(latent, 1, pos, 1), {batch, c.latent});
        Tensor gates = add(matmul(x, wx), bias);
        if (h.defined()) gates = add(gates, matmul(h, wh));
        Tensor in_gate = sigmoid(slice(gates, 1, 0, H));
        Tensor forget_gate = sigmoid(slice(gates, 1, H, H));
        Tensor candidate = tanh(slice(gates, 1, 2 * H, H));
        Tensor out_gate = sigmoid(slice(gates, 1, 3 * H, H));
        cell = cell.defined() ? add(mul(forget_gate, cell), mul(in_gate, candidate)) : mul(in_gate, candidate);
        h = mul(out_gate, tanh(cell));
    }
    Tensor out = affine(relu(affine(h, p.fc1)), p.fc2);
    return reshape(out, {batch, c.pred_steps, c.n_vars});
}

Tensor MemAAE::predict_forward(const Tensor& latent) const { return run_predictor(latent, forward_, false); }
Tensor MemAAE::predict_backward(const Tensor& latent) const { return run_predictor(latent, backward_, true); }

// --- parameter groups -------------------------------------------------------

std::vector<Tensor> MemAAE::collect(std::initializer_list<std::size_t> ids) const {
    std::vector<Tensor> out;
    for (auto id : ids) out.push_back(params_[id].tensor);
    return out;
}

std::vector<Tensor> MemAAE::collect(const Predictor& p) const {
    return collect({p.input_gates, p.hidden_gates, p.gate_bias, p.fc1.weight, p.fc1.bias, p.fc2.weight, p.fc2.bias});
}

std::vector<Tensor> MemAAE::encoder_params() const {
    std::vector<Tensor> out;
    for (const auto& conv : encoder_convs_)
        for (auto& t : collect({conv.weight, conv.bias})) out.push_back(t);
    for (auto& t : collect({encoder_out_.weight, encoder_out_.bias})) out.push_back(t);
    return out;
}

std::vector<Tensor> MemAAE::decoder_params() const {
    std::vector<Tensor> out = collect({decoder_in_.weight, decoder_in_.bias});
    for (const auto& conv : decoder_convs_)
        for (auto& t : collect({conv.weight, conv.bias})) out.push_back(t);
    return out;
}

std::vector<Tensor> MemAAE::memory_params() const {
    return collect({memory_, projection_.weight, projection_.bias});
}

std::vector<Tensor> MemAAE::discriminator_params() const {
    std::vector<Tensor> out;
    for (const auto& conv : disc_convs_)
        for (auto& t : collect({conv.weight, conv.bias})) out.push_back(t);
    for (auto& t : collect({disc_out_.weight, disc_out_.bias})) out.push_back(t);
    return out;
}

std::vector<Tensor> MemAAE::forward_predictor_params() const { return collect(forward_); }
std::vector<Tensor> MemAAE::backward_predictor_params() const { return collect(backward_); }

std::vector<Tensor> MemAAE::generator_params() const {
    std::vector<Tensor> out = encoder_params();
    auto append = [&out](const std::vector<Tensor>& more) { out.insert(out.end(), more.begin(), more.end()); };
    append(decoder_params());
    if (!config_.no_memory) append(memory_params());
    if (!config_.no_prediction) {
        append(forward_predictor_params());
        append(backward_predictor_params());
    }
    return out;
}

}  // namespace memaae::model
