#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "memaae/numcore/tensor.hpp"

namespace memaae::model {

using nc::Tensor;

// Network architecture. The defaults are the documented reference layout:
// two conv1d layers (kernel 4, stride 2, channels 32 then 64), latent 16,
// 512 memory slots, LSTM hidden size 64.
struct ModelConfig {
    std::size_t window = 32;
    std::size_t n_vars = 1;
    std::size_t latent = 16;
    std::size_t memory_slots = 512;
    std::size_t pred_steps = 7;
    std::size_t hidden = 64;
    std::vector<std::size_t> channels = {32, 64};
    std::size_t kernel = 4;
    std::size_t stride = 2;
    std::size_t padding = 1;
    bool no_memory = false;
    bool no_prediction = false;

    // Length of the latent sequence produced from one window.
    std::size_t latent_length() const;
    // Throws a config error unless decode(encode(x)) has the window's shape.
    void validate() const;
};

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

struct MemoryRead {
    Tensor weights;  // (batch, L, slots); undefined when memory is disabled
    Tensor latent;   // (batch, L, D)
};

// All learnable parameters plus the forward computation of every component.
// Windows are (batch, W, K); latent sequences are (batch, L, D).
class MemAAE {
public:
    MemAAE(ModelConfig config, std::uint64_t seed);
    // Copies would alias the parameter nodes.
    MemAAE(const MemAAE&) = delete;
    MemAAE& operator=(const MemAAE&) = delete;
    MemAAE(MemAAE&&) = default;
    MemAAE& operator=(MemAAE&&) = default;

    const ModelConfig& config() const { return config_; }

    Tensor encode(const Tensor& x) const;
    MemoryRead memory_read(const Tensor& z) const;
    Tensor decode(const Tensor& latent) const;
    // Probability that each window is real data, shape (batch, 1).
    Tensor discriminate(const Tensor& x) const;
    // (batch, T, K); row i-1 predicts the i-th step after the window end.
    Tensor predict_forward(const Tensor& latent) const;
    // (batch, T, K); row i-1 predicts the i-th step before the window start.
    Tensor predict_backward(const Tensor& latent) const;

    // Every parameter in declaration order (the checkpoint order).
    const std::vector<NamedTensor>& parameters() const { return params_; }
    std::vector<NamedTensor>& parameters() { return params_; }
    Tensor& parameter(const std::string& name);
    const Tensor& parameter(const std::string& name) const;

    std::vector<Tensor> encoder_params() const;
    std::vector<Tensor> decoder_params() const;
    std::vector<Tensor> memory_params() const;
    std::vector<Tensor> discriminator_params() const;
    std::vector<Tensor> forward_predictor_params() const;
    std::vector<Tensor> backward_predictor_params() const;
    // Parameters updated on the autoencoder side, honoring the ablation flags.
    std::vector<Tensor> generator_params() const;

private:
    struct Conv {
        std::size_t weight, bias;
    };
    struct Affine {
        std::size_t weight, bias;
    };
    struct Predictor {
        std::size_t input_gates, hidden_gates, gate_bias;
        Affine fc1, fc2;
    };

    std::size_t add_param(std::string name, nc::Shape shape);
    Conv add_conv(const std::string& prefix, std::size_t in, std::size_t out, std::size_t kernel, bool transposed);
    Affine add_affine(const std::string& prefix, std::size_t in, std::size_t out);
    Predictor add_predictor(const std::string& prefix);
    void initialize(std::uint64_t seed);

    Tensor conv_stack(const Tensor& x, const std::vector<Conv>& layers) const;
    Tensor affine(const Tensor& x, const Affine& layer) const;
    Tensor run_predictor(const Tensor& latent, const Predictor& p, bool reversed) const;
    std::vector<Tensor> collect(std::initializer_list<std::size_t> ids) const;
    std::vector<Tensor> collect(const Predictor& p) const;

    ModelConfig config_;
    std::vector<NamedTensor> params_;
    std::vector<Conv> encoder_convs_;
    Affine encoder_out_{};
    std::size_t memory_ = 0;
    Affine projection_{};
    Affine decoder_in_{};
    std::vector<Conv> decoder_convs_;
    std::vector<Conv> disc_convs_;
    Affine disc_out_{};
    Predictor forward_{}, backward_{};
};

}  // namespace memaae::model
