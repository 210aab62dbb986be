#include "sdreamer/training/losses.hpp"

#include <algorithm>

#include "sdreamer/common/error.hpp"
#include "sdreamer/common/log.hpp"
#include "sdreamer/tensor/ops.hpp"

namespace sdreamer::training {

namespace ops = sdreamer::tensor;

void DistillConfig::validate() const {
    std::vector<std::string> problems;
    if (!(tau_eeg > 0.0)) problems.push_back("tau_eeg must be positive");
    if (!(tau_emg > 0.0)) problems.push_back("tau_emg must be positive");
    if (!(alpha >= 0.0 && alpha <= 1.0)) problems.push_back("alpha must lie in [0, 1]");
    if (!problems.empty()) {
        std::string message = "invalid distillation config:";
        for (const auto& p : problems) message += "\n  " + p;
        throw ConfigError(message);
    }
}

std::size_t count_labeled(const std::vector<Stage>& labels) {
    return static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), is_labeled));
}

Tensor softmax_tau(const Tensor& logits, double tau) {
    if (!(tau > 0.0)) throw ConfigError("temperature must be positive, got " + std::to_string(tau));
    return ops::softmax(tau == 1.0 ? logits : ops::scale(logits, 1.0 / tau), -1);
}

namespace {

void check_rows(const Tensor& logits, const std::vector<Stage>& labels, const char* what) {
    if (logits.rank() != 2 || logits.dim(0) != labels.size()) {
        throw ShapeError(std::string(what) + ": logits " + tensor::to_string(logits.shape()) + " vs " +
                         std::to_string(labels.size()) + " labels");
    }
}

// [N] weights: 1 / n_labeled on labeled rows, 0 elsewhere.
Tensor row_weights(const std::vector<Stage>& labels, std::size_t labeled) {
    std::vector<double> w(labels.size(), 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (is_labeled(labels[i])) w[i] = 1.0 / static_cast<double>(labeled);
    }
    return Tensor({labels.size()}, std::move(w));
}

}  // namespace

Tensor sd_loss(const Tensor& student, const Tensor& teacher, double tau, const std::vector<Stage>& labels,
               const DistillConfig& cfg) {
    check_rows(student, labels, "sd_loss");
    if (teacher.shape() != student.shape()) throw ShapeError("sd_loss: student and teacher logits differ in shape");
    if (!(tau > 0.0)) throw ConfigError("temperature must be positive, got " + std::to_string(tau));
    const std::size_t labeled = count_labeled(labels);
    if (labeled == 0) {
        warn("distillation loss over a fully masked batch; returning 0");
        return Tensor::scalar(0.0);
    }
    const Tensor t = cfg.detach_teacher ? teacher.detach() : teacher;
    const double inv = 1.0 / tau;
    const auto log_s = ops::log_softmax(ops::scale(student, inv), 1);
    const auto log_t = ops::log_softmax(ops::scale(t, inv), 1);
    // KL(p || q) = sum p (log p - log q)
    const auto& log_p = cfg.teacher_first ? log_t : log_s;
    const auto& log_q = cfg.teacher_first ? log_s : log_t;
    const auto p = ops::softmax(ops::scale(cfg.teacher_first ? t : student, inv), 1);
    const auto kl = ops::sum(ops::mul(p, ops::sub(log_p, log_q)), 1);  // [N]
    auto loss = ops::sum(ops::mul(kl, row_weights(labels, labeled)));
    if (cfg.scale_by_tau_sq) loss = ops::scale(loss, tau * tau);
    return loss;
}

Tensor ce_loss(const Tensor& logits, const std::vector<Stage>& labels) {
    check_rows(logits, labels, "ce_loss");
    const std::size_t labeled = count_labeled(labels);
    if (labeled == 0) throw DataError("cross-entropy over a batch with no labeled samples");
    const std::size_t c = logits.dim(1);
    std::vector<double> target(labels.size() * c, 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!is_labeled(labels[i])) continue;
        const auto k = class_index(labels[i]);
        if (k >= c) throw DataError("label index out of range");
        target[i * c + k] = -1.0 / static_cast<double>(labeled);
    }
    return ops::sum(ops::mul(ops::log_softmax(logits, 1), Tensor({labels.size(), c}, std::move(target))));
}

double combine(double ce, double sd_eeg, double sd_emg, double alpha) {
    return (1.0 - alpha) * ce + (alpha / 2.0) * (sd_eeg + sd_emg);
}

LossBreakdown total_loss(double ce, double sd_eeg, double sd_emg, double alpha, std::size_t n_labeled) {
    return {ce, sd_eeg, sd_emg, combine(ce, sd_eeg, sd_emg, alpha), n_labeled};
}

}  // namespace sdreamer::training
