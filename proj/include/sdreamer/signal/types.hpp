#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sdreamer/common/modality.hpp"

namespace sdreamer::signal {

// One subject's dual-channel trace with per-second labels. An absent
// channel is an empty vector (e.g. an EEG-only recording used for
// inference).
struct SignalRecord {
    std::string subject_id;
    std::size_t sample_rate_hz = 512;
    std::vector<double> eeg;
    std::vector<double> emg;
    std::vector<Stage> labels;

    ModalitySet modalities() const { return {!eeg.empty(), !emg.empty()}; }
    const std::vector<double>& channel(Modality m) const { return m == Modality::Eeg ? eeg : emg; }
    std::vector<double>& channel(Modality m) { return m == Modality::Eeg ? eeg : emg; }
    // Samples per channel (0 when the record is empty).
    std::size_t length() const { return eeg.empty() ? emg.size() : eeg.size(); }

    // Throws DataError if channel lengths or the label count are inconsistent.
    void validate() const;
};

// One second of signal: row-major M x T with rows ordered [EEG, EMG]. Rows
// of absent modalities are zero.
struct EpochSample {
    std::vector<double> signal;
    std::size_t samples = 0;  // T
    ModalitySet modalities;
    Stage label = Stage::Unlabeled;
    std::string subject_id;
    std::size_t position = 0;

    std::span<const double> channel(Modality m) const {
        return std::span<const double>(signal).subspan(static_cast<std::size_t>(m) * samples, samples);
    }
};

// K consecutive epochs of one record.
struct SequenceSample {
    std::vector<EpochSample> epochs;
    std::size_t length() const { return epochs.size(); }
};

// M x P x W patch tensor of one epoch (row-major, modality-major).
struct PatchedEpoch {
    std::vector<double> patches;
    std::size_t patch_count = 0;  // P
    std::size_t width = 0;        // W
    ModalitySet modalities;

    std::span<const double> modality(Modality m) const {
        const std::size_t n = patch_count * width;
        return std::span<const double>(patches).subspan(static_cast<std::size_t>(m) * n, n);
    }
};

struct ChannelStats {
    double mean = 0.0;
    double std = 1.0;  // population standard deviation
    bool present = false;
};

struct NormalizationStats {
    std::string subject_id;
    ChannelStats eeg;
    ChannelStats emg;

    const ChannelStats& channel(Modality m) const { return m == Modality::Eeg ? eeg : emg; }
    ChannelStats& channel(Modality m) { return m == Modality::Eeg ? eeg : emg; }
};

}  // namespace sdreamer::signal
