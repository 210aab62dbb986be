#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sdreamer/models/model.hpp"
#include "sdreamer/signal/preprocess.hpp"

namespace sdreamer::training {

// Normalised, sliced and patched epochs of one or more subjects, kept in
// record order so consecutive positions form sequences.
struct EpochDataset {
    std::vector<signal::PatchedEpoch> epochs;
    std::vector<Stage> labels;
    std::vector<std::string> subjects;
    std::vector<std::size_t> positions;
    ModalitySet modalities;  // present in every epoch
    std::size_t sample_rate_hz = 0;

    std::size_t size() const { return epochs.size(); }
    // Epoch metadata without signal (enough for windowing helpers).
    std::vector<signal::EpochSample> skeleton() const;

    // Each record is normalised over its whole trace, sliced into one-second
    // epochs and patched with `patch_width`. All records must share the
    // sample rate and channel set.
    static EpochDataset from_records(const std::vector<signal::SignalRecord>& records, std::size_t patch_width);
};

// Batch of epochs `indices` (epoch model).
models::Batch epoch_batch(const EpochDataset& data, const std::vector<std::size_t>& indices, ModalitySet use);

// Batch of K-long windows starting at `starts` (sequence model).
models::Batch sequence_batch(const EpochDataset& data, const std::vector<std::size_t>& starts, std::size_t k,
                             ModalitySet use);

}  // namespace sdreamer::training
