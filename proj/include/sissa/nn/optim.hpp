#pragma once

#include <cmath>

#include "sissa/nn/tensor.hpp"

namespace sissa::nn {

struct AdamConfig {
    float lr = 1e-3f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
};

// Adam with bias-corrected moments, one (m, v) pair per parameter tensor.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    void step(std::vector<Tensor*> params,
              const std::vector<const Tensor*>& grads) {
        if (m_.empty()) {
            for (auto* p : params) {
                m_.emplace_back(p->shape);
                v_.emplace_back(p->shape);
            }
        }
        ++t_;
        const float bc1 = 1.0f - std::pow(cfg_.beta1, static_cast<float>(t_));
        const float bc2 = 1.0f - std::pow(cfg_.beta2, static_cast<float>(t_));
        for (size_t i = 0; i < params.size(); ++i) {
            Tensor& p = *params[i];
            const Tensor& g = *grads[i];
            Tensor& m = m_[i];
            Tensor& v = v_[i];
            for (int64_t j = 0; j < p.numel(); ++j) {
                const float gj = g.data[j];
                m.data[j] = cfg_.beta1 * m.data[j] + (1.0f - cfg_.beta1) * gj;
                v.data[j] =
                    cfg_.beta2 * v.data[j] + (1.0f - cfg_.beta2) * gj * gj;
                const float mhat = m.data[j] / bc1;
                const float vhat = v.data[j] / bc2;
                p.data[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
        }
    }

    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    std::vector<Tensor> m_, v_;
    int64_t t_ = 0;
};

}  // namespace sissa::nn
