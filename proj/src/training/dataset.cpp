#include "sdreamer/training/dataset.hpp"

#include "sdreamer/common/error.hpp"
#include "sdreamer/models/batch.hpp"

namespace sdreamer::training {

std::vector<signal::EpochSample> EpochDataset::skeleton() const {
    std::vector<signal::EpochSample> out(size());
    for (std::size_t i = 0; i < size(); ++i) {
        out[i].subject_id = subjects[i];
        out[i].position = positions[i];
        out[i].label = labels[i];
        out[i].modalities = epochs[i].modalities;
        out[i].samples = sample_rate_hz;
    }
    return out;
}

EpochDataset EpochDataset::from_records(const std::vector<signal::SignalRecord>& records, std::size_t patch_width) {
    if (records.empty()) throw DataError("no records");
    EpochDataset data;
    data.modalities = records.front().modalities();
    data.sample_rate_hz = records.front().sample_rate_hz;
    for (const auto& record : records) {
        if (record.modalities() != data.modalities) {
            throw DataError(record.subject_id + ": channel set " + to_string(record.modalities()) +
                            " differs from " + to_string(data.modalities));
        }
        if (record.sample_rate_hz != data.sample_rate_hz) {
            throw DataError(record.subject_id + ": sample rate differs from the other records");
        }
        const auto normalized = signal::normalize_subject(record).first;
        for (const auto& e : signal::slice_epochs(normalized)) {
            data.epochs.push_back(signal::patch(e, patch_width));
            data.labels.push_back(e.label);
            data.subjects.push_back(e.subject_id);
            data.positions.push_back(e.position);
        }
    }
    return data;
}

models::Batch epoch_batch(const EpochDataset& data, const std::vector<std::size_t>& indices, ModalitySet use) {
    std::vector<const signal::PatchedEpoch*> epochs;
    std::vector<Stage> labels;
    epochs.reserve(indices.size());
    labels.reserve(indices.size());
    for (const auto i : indices) {
        epochs.push_back(&data.epochs.at(i));
        labels.push_back(data.labels.at(i));
    }
    return models::make_epoch_batch(epochs, std::move(labels), use);
}

models::Batch sequence_batch(const EpochDataset& data, const std::vector<std::size_t>& starts, std::size_t k,
                             ModalitySet use) {
    std::vector<std::vector<const signal::PatchedEpoch*>> sequences;
    std::vector<Stage> labels;
    sequences.reserve(starts.size());
    labels.reserve(starts.size() * k);
    for (const auto s : starts) {
        if (s + k > data.size()) throw DataError("sequence window runs past the dataset");
        auto& seq = sequences.emplace_back();
        for (std::size_t j = s; j < s + k; ++j) {
            seq.push_back(&data.epochs[j]);
            labels.push_back(data.labels[j]);
        }
    }
    return models::make_sequence_batch(sequences, std::move(labels), use);
}

}  // namespace sdreamer::training
