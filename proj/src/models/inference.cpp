#include "sdreamer/models/inference.hpp"

#include <algorithm>
#include <cmath>

#include "sdreamer/common/error.hpp"

namespace sdreamer::models {

PathwayMode parse_pathway_mode(const std::string& text) {
    if (text == "auto") return PathwayMode::Auto;
    if (text == "eeg") return PathwayMode::Eeg;
    if (text == "emg") return PathwayMode::Emg;
    if (text == "mix") return PathwayMode::Mix;
    throw ConfigError("pathway must be one of auto, eeg, emg, mix (got '" + text + "')");
}

std::string to_string(PathwayMode mode) {
    switch (mode) {
        case PathwayMode::Auto: return "auto";
        case PathwayMode::Eeg: return "eeg";
        case PathwayMode::Emg: return "emg";
        case PathwayMode::Mix: return "mix";
    }
    return "auto";
}

Pathway select_pathway(PathwayMode mode, ModalitySet available) {
    if (available.empty()) throw DataError("input carries no modality");
    switch (mode) {
        case PathwayMode::Auto:
            if (available.full()) return Pathway::Mix;
            return available.eeg ? Pathway::Eeg : Pathway::Emg;
        case PathwayMode::Eeg:
            if (!available.eeg) throw DataError("EEG pathway forced but the input has no EEG channel");
            return Pathway::Eeg;
        case PathwayMode::Emg:
            if (!available.emg) throw DataError("EMG pathway forced but the input has no EMG channel");
            return Pathway::Emg;
        case PathwayMode::Mix:
            if (!available.full()) {
                throw DataError("MIX pathway needs both EEG and EMG, input has only " + to_string(available));
            }
            return Pathway::Mix;
    }
    return Pathway::Mix;
}

std::vector<Prediction> infer(const Model& model, const Batch& batch, PathwayMode mode, bool with_embeddings) {
    const auto pathway = select_pathway(mode, batch.modalities());
    // Only the chosen pathway runs, so the other modality is never read.
    Batch input;
    if (pathway != Pathway::Emg) input.eeg = batch.eeg;
    if (pathway != Pathway::Eeg) input.emg = batch.emg;
    const auto result = model.forward(input, PathwaySet::only(pathway));
    const auto& logits = result.logits.at(pathway);
    const auto& features = result.features.at(pathway);

    const std::size_t n = logits.dim(0);
    const std::size_t c = logits.dim(1);
    const std::size_t f = features.dim(1);
    const auto z = logits.data();
    const auto h = features.data();
    std::vector<Prediction> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& p = out[i];
        p.pathway = pathway;
        const double* row = z.data() + i * c;
        const double top = *std::max_element(row, row + c);
        double total = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            p.probs[j] = std::exp(row[j] - top);
            total += p.probs[j];
        }
        std::size_t best = 0;
        for (std::size_t j = 0; j < c; ++j) {
            p.probs[j] /= total;
            if (row[j] > row[best]) best = j;
        }
        p.label = stage_from_class(best);
        if (with_embeddings) p.embedding.assign(h.begin() + static_cast<long>(i * f), h.begin() + static_cast<long>((i + 1) * f));
    }
    return out;
}

}  // namespace sdreamer::models
