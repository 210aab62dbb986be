#pragma once

#include <cstddef>
#include <vector>

#include "sdreamer/common/modality.hpp"
#include "sdreamer/tensor/tensor.hpp"

namespace sdreamer::training {

using tensor::Tensor;

struct DistillConfig {
    double tau_eeg = 1.0;
    double tau_emg = 3.0;
    double alpha = 0.33;
    bool detach_teacher = true;
    bool scale_by_tau_sq = false;
    bool teacher_first = false;  // KL(teacher || student) instead of the default student-first order
    bool sd_eeg_on = true;
    bool sd_emg_on = true;

    void validate() const;  // throws ConfigError
};

struct LossBreakdown {
    double ce = 0.0;
    double sd_eeg = 0.0;
    double sd_emg = 0.0;
    double total = 0.0;
    std::size_t n_labeled = 0;
};

// exp(z / tau) normalised along the last axis. Throws ConfigError for tau <= 0.
Tensor softmax_tau(const Tensor& logits, double tau);

// Mean over labeled rows of KL(p_tau(student) || p_tau(teacher)) for logits
// [N, C]; `labels` only selects rows. Returns a zero scalar (with a warning)
// when every row is masked.
Tensor sd_loss(const Tensor& student, const Tensor& teacher, double tau, const std::vector<Stage>& labels,
               const DistillConfig& cfg = {});

// Mean negative log-likelihood at tau = 1 over labeled rows. Throws
// DataError when nothing is labeled.
Tensor ce_loss(const Tensor& logits, const std::vector<Stage>& labels);

// (1 - alpha) ce + (alpha / 2)(sd_eeg + sd_emg)
double combine(double ce, double sd_eeg, double sd_emg, double alpha);
LossBreakdown total_loss(double ce, double sd_eeg, double sd_emg, double alpha, std::size_t n_labeled = 0);

std::size_t count_labeled(const std::vector<Stage>& labels);

}  // namespace sdreamer::training
