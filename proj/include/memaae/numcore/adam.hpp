#pragma once

#include <cstdint>
#include <vector>

#include "memaae/numcore/tensor.hpp"

namespace memaae::nc {

struct AdamOptions {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Bias-corrected Adam over a fixed parameter list.
class Adam {
public:
    Adam(std::vector<Tensor> params, AdamOptions options = {});

    // Applies one update from the populated grads, then clears them.
    // Throws if any parameter has no grad.
    void step();

    std::uint64_t steps() const { return step_; }
    const AdamOptions& options() const { return options_; }
    const std::vector<Tensor>& params() const { return params_; }
    const std::vector<double>& first_moment(std::size_t i) const { return m_[i]; }
    const std::vector<double>& second_moment(std::size_t i) const { return v_[i]; }

private:
    std::vector<Tensor> params_;
    AdamOptions options_;
    std::vector<std::vector<double>> m_, v_;
    std::uint64_t step_ = 0;
};

// Global L2 norm over the grads of `params` (missing grads count as zero).
double grad_norm(const std::vector<Tensor>& params);

// Rescales grads so their global L2 norm is at most `max_norm`.
// Returns the norm before clipping.
double clip_grad_norm(std::vector<Tensor>& params, double max_norm);

void zero_grads(std::vector<Tensor>& params);

}  // namespace memaae::nc
