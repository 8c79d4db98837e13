#include "radssl/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace radssl {

AdamW::AdamW(Eigen::Index size, double learning_rate, double weight_decay, double beta1, double beta2, double eps)
    : lr_(learning_rate), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps), m_(Vector::Zero(size)),
      v_(Vector::Zero(size)) {}

void AdamW::step(Vector& params, const Vector& grad) {
    if (params.size() != m_.size() || grad.size() != m_.size()) throw std::invalid_argument("AdamW: size mismatch");
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    params.array() -= lr_ * ((m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_) + wd_ * params.array());
}

}  // namespace radssl
