#pragma once

#include "radssl/feature_map.hpp"

namespace radssl {

// Adam with decoupled weight decay: params <- params - lr * (m_hat / (sqrt(v_hat) + eps) + wd * params).
class AdamW {
public:
    AdamW(Eigen::Index size, double learning_rate, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
          double eps = 1e-8);

    void step(Vector& params, const Vector& grad);
    [[nodiscard]] long steps() const { return t_; }

private:
    double lr_;
    double wd_;
    double beta1_;
    double beta2_;
    double eps_;
    long t_ = 0;
    Vector m_;
    Vector v_;
};

}  // namespace radssl
