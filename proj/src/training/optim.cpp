#include "sdreamer/training/optim.hpp"

#include <cmath>

#include "sdreamer/common/error.hpp"

namespace sdreamer::training {

AdamW::AdamW(mome::ParameterList params, AdamWConfig config) : params_(std::move(params)), config_(config) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.emplace_back(p.value.size(), 0.0);
        v_.emplace_back(p.value.size(), 0.0);
    }
}

void AdamW::step() {
    for (const auto& p : params_) {
        if (!p.value.has_grad()) continue;
        for (const double g : p.value.grad()) {
            if (!std::isfinite(g)) throw NumericError("non-finite gradient in parameter '" + p.name + "'");
        }
    }
    ++t_;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    const double decay = config_.lr * config_.weight_decay;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        tensor::Tensor value = params_[i].value;
        auto data = value.data();
        const bool has = value.has_grad();
        const auto grad = has ? value.grad() : std::span<const double>{};
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < data.size(); ++j) {
            const double g = has ? grad[j] : 0.0;
            m[j] = b1 * m[j] + (1.0 - b1) * g;
            v[j] = b2 * v[j] + (1.0 - b2) * g * g;
            data[j] -= decay * data[j];
            data[j] -= config_.lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + config_.eps);
        }
    }
}

void AdamW::zero_grad() {
    for (auto& p : params_) {
        tensor::Tensor value = p.value;
        value.zero_grad();
    }
}

}  // namespace sdreamer::training
