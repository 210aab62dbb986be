#pragma once

#include <vector>

#include "sdreamer/models/model.hpp"
#include "sdreamer/signal/types.hpp"

namespace sdreamer::models {

// Stacks patched epochs into [B, P, W] per modality in `use`. Every epoch
// must carry each modality in `use`; `labels` is copied as-is.
Batch make_epoch_batch(const std::vector<const signal::PatchedEpoch*>& epochs, std::vector<Stage> labels,
                       ModalitySet use);

// Stacks B sequences of K patched epochs into [B, K, P, W]. All sequences
// must have the same K. Labels are B * K, sequence-major.
Batch make_sequence_batch(const std::vector<std::vector<const signal::PatchedEpoch*>>& sequences,
                          std::vector<Stage> labels, ModalitySet use);

}  // namespace sdreamer::models
