#include "sdreamer/training/metrics.hpp"

#include <json.hpp>

#include "sdreamer/common/error.hpp"

namespace sdreamer::training {

EvalReport report_from_confusion(const Confusion& confusion, std::size_t n_masked) {
    EvalReport r;
    r.confusion = confusion;
    r.n_masked = n_masked;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < kNumClasses; ++i) {
        for (std::size_t j = 0; j < kNumClasses; ++j) r.n_labeled += confusion[i][j];
        correct += confusion[i][i];
    }
    if (r.n_labeled == 0) throw DataError("evaluation set has no labeled samples");
    r.accuracy = static_cast<double>(correct) / static_cast<double>(r.n_labeled);

    double f1_sum = 0.0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        std::size_t truth = 0;
        std::size_t predicted = 0;
        for (std::size_t k = 0; k < kNumClasses; ++k) {
            truth += confusion[c][k];
            predicted += confusion[k][c];
        }
        const double tp = static_cast<double>(confusion[c][c]);
        r.precision[c] = predicted ? tp / static_cast<double>(predicted) : 0.0;
        r.recall[c] = truth ? tp / static_cast<double>(truth) : 0.0;
        if (truth == 0 && predicted == 0) {
            r.absent_classes.push_back(c);
            r.f1[c] = 0.0;
        } else {
            r.f1[c] = 2.0 * tp / static_cast<double>(truth + predicted);
        }
        f1_sum += r.f1[c];
    }
    r.macro_f1 = f1_sum / static_cast<double>(kNumClasses);
    return r;
}

EvalReport evaluate_predictions(const std::vector<Stage>& predicted, const std::vector<Stage>& truth) {
    if (predicted.size() != truth.size()) throw ShapeError("prediction and truth counts differ");
    Confusion confusion{};
    std::size_t masked = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (!is_labeled(truth[i])) {
            ++masked;
            continue;
        }
        if (!is_labeled(predicted[i])) throw DataError("prediction " + std::to_string(i) + " is not a class");
        ++confusion[class_index(truth[i])][class_index(predicted[i])];
    }
    return report_from_confusion(confusion, masked);
}

std::string EvalReport::to_json() const {
    nlohmann::ordered_json j;
    j["pathway"] = pathway;
    j["accuracy"] = accuracy;
    j["macro_f1"] = macro_f1;
    j["f1_average"] = "macro";
    j["n_labeled"] = n_labeled;
    j["n_masked"] = n_masked;
    auto& per_class = j["per_class"];
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        per_class[std::string(stage_name(stage_from_class(c)))] = {
            {"precision", precision[c]}, {"recall", recall[c]}, {"f1", f1[c]}};
    }
    j["confusion"] = confusion;
    j["confusion_axes"] = "rows=truth, columns=predicted, order=Wake,SWS,REM";
    auto absent = nlohmann::ordered_json::array();
    for (const auto c : absent_classes) absent.push_back(stage_name(stage_from_class(c)));
    j["absent_classes"] = absent;
    return j.dump(2);
}

}  // namespace sdreamer::training
