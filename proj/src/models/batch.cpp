#include "sdreamer/models/batch.hpp"

#include <algorithm>

#include "sdreamer/common/error.hpp"

namespace sdreamer::models {

namespace {

// Copies one modality of `epochs` back to back into a flat buffer.
std::vector<double> gather(const std::vector<const signal::PatchedEpoch*>& epochs, Modality m) {
    const auto& first = *epochs.front();
    const std::size_t n = first.patch_count * first.width;
    std::vector<double> out(epochs.size() * n);
    for (std::size_t i = 0; i < epochs.size(); ++i) {
        const auto& e = *epochs[i];
        if (e.patch_count != first.patch_count || e.width != first.width) {
            throw ShapeError("epochs in one batch have different patch geometry");
        }
        if (!e.modalities.has(m)) {
            throw DataError(std::string(to_string(m)) + " requested but missing from an epoch in the batch");
        }
        const auto src = e.modality(m);
        std::copy(src.begin(), src.end(), out.begin() + static_cast<long>(i * n));
    }
    return out;
}

Batch stack(const std::vector<const signal::PatchedEpoch*>& flat, const tensor::Shape& lead,
            std::vector<Stage> labels, ModalitySet use) {
    if (flat.empty()) throw DataError("empty batch");
    if (use.empty()) throw DataError("batch must use at least one modality");
    tensor::Shape shape = lead;
    shape.push_back(flat.front()->patch_count);
    shape.push_back(flat.front()->width);
    Batch batch;
    if (use.eeg) batch.eeg = Tensor(shape, gather(flat, Modality::Eeg));
    if (use.emg) batch.emg = Tensor(shape, gather(flat, Modality::Emg));
    batch.labels = std::move(labels);
    return batch;
}

}  // namespace

Batch make_epoch_batch(const std::vector<const signal::PatchedEpoch*>& epochs, std::vector<Stage> labels,
                       ModalitySet use) {
    return stack(epochs, {epochs.size()}, std::move(labels), use);
}

Batch make_sequence_batch(const std::vector<std::vector<const signal::PatchedEpoch*>>& sequences,
                          std::vector<Stage> labels, ModalitySet use) {
    if (sequences.empty()) throw DataError("empty batch");
    const std::size_t k = sequences.front().size();
    std::vector<const signal::PatchedEpoch*> flat;
    flat.reserve(sequences.size() * k);
    for (const auto& seq : sequences) {
        if (seq.size() != k || k == 0) throw ShapeError("sequences in one batch must share a positive length");
        flat.insert(flat.end(), seq.begin(), seq.end());
    }
    return stack(flat, {sequences.size(), k}, std::move(labels), use);
}

}  // namespace sdreamer::models
