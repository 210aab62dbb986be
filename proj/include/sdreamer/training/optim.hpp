#pragma once

#include <cstdint>
#include <vector>

#include "sdreamer/mome/layers.hpp"

namespace sdreamer::training {

struct AdamWConfig {
    double lr = 1e-3;
    double weight_decay = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// AdamW with decoupled weight decay:
//   p <- p - lr * wd * p
//   p <- p - lr * m_hat / (sqrt(v_hat) + eps)
// Parameters without a gradient buffer are treated as having zero gradient.
class AdamW {
public:
    AdamW(mome::ParameterList params, AdamWConfig config);

    // Throws NumericError naming the parameter if any gradient is non-finite;
    // nothing is modified in that case.
    void step();
    void zero_grad();

    std::uint64_t steps() const noexcept { return t_; }
    const AdamWConfig& config() const noexcept { return config_; }
    const mome::ParameterList& parameters() const noexcept { return params_; }
    const std::vector<double>& first_moment(std::size_t i) const { return m_.at(i); }
    const std::vector<double>& second_moment(std::size_t i) const { return v_.at(i); }

private:
    mome::ParameterList params_;
    AdamWConfig config_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    std::uint64_t t_ = 0;
};

}  // namespace sdreamer::training
