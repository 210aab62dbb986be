#pragma once

#include "sdreamer/signal/synth.hpp"
#include "sdreamer/training/dataset.hpp"

namespace sdreamer::testing {

// A 4 Hz synthetic dataset sized for tiny models (T=4, W=2).
inline training::EpochDataset tiny_dataset(std::size_t subjects, std::size_t seconds, std::uint64_t seed,
                                           double unlabeled_rate = 0.0) {
    signal::SynthConfig cfg;
    cfg.sample_rate_hz = 4;
    cfg.signatures = {{{1.0, 0.6, 1.0}, {0.25, 2.0, 0.15}, {0.5, 0.7, 0.1}}};
    cfg.unlabeled_rate = unlabeled_rate;
    return training::EpochDataset::from_records(signal::synth_generate(subjects, seconds, seed, cfg), 2);
}

}  // namespace sdreamer::testing
