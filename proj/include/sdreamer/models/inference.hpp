#pragma once

#include <array>
#include <string>
#include <vector>

#include "sdreamer/models/model.hpp"

namespace sdreamer::models {

enum class PathwayMode { Auto, Eeg, Emg, Mix };

PathwayMode parse_pathway_mode(const std::string& text);  // auto | eeg | emg | mix
std::string to_string(PathwayMode mode);

// Auto picks MIX for dual-channel input and otherwise the pathway of the one
// available modality. A forced pathway must be servable by `available`.
Pathway select_pathway(PathwayMode mode, ModalitySet available);

struct Prediction {
    Stage label = Stage::Wake;
    std::array<double, kNumClasses> probs{};
    Pathway pathway = Pathway::Mix;
    std::vector<double> embedding;  // head input, filled on request
};

// One prediction per output position of `batch` (B or B * K). Runs without a
// tape, so parameters are only read.
std::vector<Prediction> infer(const Model& model, const Batch& batch, PathwayMode mode,
                              bool with_embeddings = false);

}  // namespace sdreamer::models
