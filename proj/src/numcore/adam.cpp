#include "memaae/numcore/adam.hpp"

#include <cmath>

#include "memaae/error.hpp"

namespace memaae::nc {

Adam::Adam(std::vector<Tensor> params, AdamOptions options) : params_(std::move(params)), options_(options) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
    }
}

void Adam::step() {
    for (std::size_t i = 0; i < params_.size(); ++i)
        if (!params_[i].has_grad())
            throw Error(ErrorKind::Argument, "adam_step: parameter " + std::to_string(i) + " of shape " +
                                                 shape_str(params_[i].shape()) + " has no gradient");
    ++step_;
    const double b1 = options_.beta1, b2 = options_.beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto value = params_[i].values();
        auto grad = params_[i].grad();
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < value.size(); ++j) {
            m[j] = b1 * m[j] + (1.0 - b1) * grad[j];
            v[j] = b2 * v[j] + (1.0 - b2) * grad[j] * grad[j];
            double m_hat = m[j] / correction1;
            double v_hat = v[j] / correction2;
            value[j] -= options_.learning_rate * m_hat / (std::sqrt(v_hat) + options_.epsilon);
        }
        params_[i].zero_grad();
    }
}

double grad_norm(const std::vector<Tensor>& params) {
    double total = 0.0;
    for (const auto& p : params)
        for (double g : p.grad()) total += g * g;
    return std::sqrt(total);
}

double clip_grad_norm(std::vector<Tensor>& params, double max_norm) {
    double norm = grad_norm(params);
    if (max_norm > 0.0 && norm > max_norm) {
        double factor = max_norm / norm;
        for (auto& p : params)
            for (double& g : p.grad()) g *= factor;
    }
    return norm;
}

void zero_grads(std::vector<Tensor>& params) {
    for (auto& p : params) p.zero_grad();
}

}  // namespace memaae::nc
