#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "sdreamer/signal/types.hpp"

namespace sdreamer::signal {

inline constexpr double kMinChannelStd = 1e-12;

// Standardises each present channel with the subject's whole-trace mean and
// population standard deviation. Throws DataError for a constant channel.
std::pair<SignalRecord, NormalizationStats> normalize_subject(const SignalRecord& record);

// One epoch per whole second; a trailing partial second is dropped.
// Unlabeled seconds are kept (they are masked later, at loss time).
std::vector<EpochSample> slice_epochs(const SignalRecord& record);

// Start indices of every window of K consecutive same-subject epochs, taken
// every `stride` epochs within each contiguous run.
std::vector<std::size_t> sequence_windows(const std::vector<EpochSample>& epochs, std::size_t k, std::size_t stride);

std::vector<SequenceSample> make_sequences(const std::vector<EpochSample>& epochs, std::size_t k, std::size_t stride);

// Windows of length K that together cover every epoch of every run of at
// least K epochs exactly once. `first_new` is the offset inside the window
// from which predictions are not already covered by the previous window.
struct TilingWindow {
    std::size_t start = 0;
    std::size_t first_new = 0;
};
std::vector<TilingWindow> tiling_windows(const std::vector<EpochSample>& epochs, std::size_t k);

// Splits each present channel into floor(T / width) non-overlapping patches.
PatchedEpoch patch(const EpochSample& epoch, std::size_t width);

}  // namespace sdreamer::signal
