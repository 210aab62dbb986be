#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sdreamer/signal/types.hpp"

// On-disk signal container: one directory per subject holding
//
//   meta        `key = value` header: subject_id, sample_rate_hz, channels
//   eeg.f32le   little-endian float32 samples (if "eeg" is listed)
//   emg.f32le   little-endian float32 samples (if "emg" is listed)
//   labels.txt  one character per second from {W, S, R, -}, no newlines
namespace sdreamer::signal {

SignalRecord load_record(const std::filesystem::path& dir);

// Samples are narrowed to float32 on write.
void save_record(const SignalRecord& record, const std::filesystem::path& dir);

// Subject directories under `root` (those containing a `meta` file), sorted.
std::vector<std::filesystem::path> list_subjects(const std::filesystem::path& root);

// Loads the given directories using up to `threads` workers; the result
// preserves input order.
std::vector<SignalRecord> load_records(const std::vector<std::filesystem::path>& dirs, unsigned threads = 1);

// Worker cap from SDREAMER_THREADS (default: hardware concurrency, min 1).
unsigned thread_limit();

}  // namespace sdreamer::signal
