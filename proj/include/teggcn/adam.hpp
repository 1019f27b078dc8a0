#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "teggcn/tensor.hpp"

namespace teggcn {

struct AdamConfig {
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;  // decoupled, applied only where apply_decay is set
};

template <typename T>
struct ParamRef {
    Tensor<T> tensor;
    bool apply_decay = false;  // weight matrices yes; biases and scalars no
};

// Bias-corrected Adam with decoupled weight decay. A missing gradient buffer
// counts as a zero gradient.
template <typename T>
class Adam {
public:
    Adam(std::vector<ParamRef<T>> params, AdamConfig cfg)
        : cfg_(cfg), params_(std::move(params)) {
        m_.resize(params_.size());
        v_.resize(params_.size());
        for (size_t i = 0; i < params_.size(); ++i) {
            m_[i].assign(params_[i].tensor->size(), T(0));
            v_[i].assign(params_[i].tensor->size(), T(0));
        }
    }

    long step_count() const { return t_; }

    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
        const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
        for (size_t i = 0; i < params_.size(); ++i) {
            auto& p = *params_[i].tensor;
            const bool has_grad = p.grad.size() == p.value.size();
            for (size_t j = 0; j < p.value.size(); ++j) {
                const T g = has_grad ? p.grad[j] : T(0);
                if (!std::isfinite(static_cast<double>(g)))
                    throw std::runtime_error("non-finite gradient in parameter '" +
                                             (p.name.empty() ? "<unnamed>" : p.name) + "'");
                m_[i][j] = static_cast<T>(cfg_.beta1) * m_[i][j] +
                           static_cast<T>(1.0 - cfg_.beta1) * g;
                v_[i][j] = static_cast<T>(cfg_.beta2) * v_[i][j] +
                           static_cast<T>(1.0 - cfg_.beta2) * g * g;
                const double mhat = m_[i][j] / bc1;
                const double vhat = v_[i][j] / bc2;
                double upd = cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.eps);
                if (params_[i].apply_decay)
                    upd += cfg_.learning_rate * cfg_.weight_decay * p.value[j];
                p.value[j] -= static_cast<T>(upd);
            }
        }
    }

    void zero_grad() {
        for (auto& p : params_) p.tensor->zero_grad();
    }

private:
    AdamConfig cfg_;
    std::vector<ParamRef<T>> params_;
    std::vector<std::vector<T>> m_, v_;
    long t_ = 0;
};

}  // namespace teggcn
