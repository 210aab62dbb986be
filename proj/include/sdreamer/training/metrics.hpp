#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "sdreamer/common/modality.hpp"

namespace sdreamer::training {

using Confusion = std::array<std::array<std::size_t, kNumClasses>, kNumClasses>;  // [truth][predicted]

// F1 is macro-averaged. A class with no true and no predicted samples has
// undefined F1; it scores 0 and is listed in `absent_classes`.
struct EvalReport {
    std::string pathway;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::array<double, kNumClasses> precision{};
    std::array<double, kNumClasses> recall{};
    std::array<double, kNumClasses> f1{};
    Confusion confusion{};
    std::size_t n_labeled = 0;
    std::size_t n_masked = 0;
    std::vector<std::size_t> absent_classes;

    std::string to_json() const;
};

// Throws DataError when no truth is labeled. Predictions at unlabeled
// truths are counted as masked.
EvalReport report_from_confusion(const Confusion& confusion, std::size_t n_masked = 0);
EvalReport evaluate_predictions(const std::vector<Stage>& predicted, const std::vector<Stage>& truth);

}  // namespace sdreamer::training
