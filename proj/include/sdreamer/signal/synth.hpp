#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "sdreamer/signal/types.hpp"

namespace sdreamer::signal {

// Stage-dependent emission parameters. EEG is a sinusoid plus white noise;
// EMG is white noise whose scale follows muscle tone.
struct StageSignature {
    double eeg_frequency_hz = 0.0;
    double eeg_amplitude = 0.0;
    double emg_amplitude = 0.0;
};

using TransitionMatrix = std::array<std::array<double, 3>, 3>;

struct SynthConfig {
    std::size_t sample_rate_hz = 512;

    // Per-second stage transitions, rows/columns ordered [Wake, SWS, REM].
    TransitionMatrix transition{{
        {0.75, 0.20, 0.05},
        {0.12, 0.76, 0.12},
        {0.25, 0.10, 0.65},
    }};
    // Fixed first stage; drawn uniformly when unset.
    std::optional<Stage> initial_stage;

    // Wake: fast low-amplitude EEG with high muscle tone. SWS: slow
    // high-amplitude EEG, no tone. REM: theta-range low-amplitude EEG, no tone.
    std::array<StageSignature, 3> signatures{{
        {22.0, 0.6, 1.0},
        {2.5, 2.0, 0.15},
        {7.0, 0.7, 0.10},
    }};
    double eeg_noise = 0.35;           // white-noise std relative to subject gain
    double amplitude_jitter = 0.2;     // per-second uniform +/- fraction on amplitudes
    double frequency_jitter = 0.15;    // per-second uniform +/- fraction on EEG frequency
    double subject_gain_spread = 0.3;  // std of log subject gain per channel
    double unlabeled_rate = 0.0;       // probability a second is scored '-'

    // Throws ConfigError naming the first offending row.
    void validate() const;
};

// Deterministic for a fixed (seed, config). Subject ids are "subject_000",
// "subject_001", ...
std::vector<SignalRecord> synth_generate(std::size_t n_subjects, std::size_t seconds_per_subject, std::uint64_t seed,
                                         const SynthConfig& config = {});

// Parses nine comma-separated row-major values.
TransitionMatrix parse_transition_matrix(const std::vector<double>& values);

}  // namespace sdreamer::signal
