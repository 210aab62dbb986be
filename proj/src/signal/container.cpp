#include "sdreamer/signal/container.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include "sdreamer/common/error.hpp"
#include "sdreamer/common/keyvalue.hpp"

namespace sdreamer::signal {

namespace fs = std::filesystem;

void SignalRecord::validate() const {
    if (sample_rate_hz == 0) {
        throw DataError(subject_id + ": sample rate must be positive");
    }
    if (!eeg.empty() && !emg.empty() && eeg.size() != emg.size()) {
        throw DataError(subject_id + ": channel length mismatch (eeg " + std::to_string(eeg.size()) + ", emg " +
                        std::to_string(emg.size()) + ")");
    }
    const std::size_t seconds = length() / sample_rate_hz;
    if (labels.size() != seconds) {
        throw DataError(subject_id + ": expected " + std::to_string(seconds) + " labels, found " +
                        std::to_string(labels.size()));
    }
}

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::vector<double> read_f32le(const fs::path& path) {
    const auto bytes = read_file(path);
    if (bytes.size() % 4 != 0) {
        throw FormatError("sample stream size is not a multiple of 4 bytes", path.string(),
                          bytes.size() - bytes.size() % 4);
    }
    std::vector<double> samples(bytes.size() / 4);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        std::uint32_t word = 0;
        for (int b = 3; b >= 0; --b) {
            word = (word << 8) | static_cast<unsigned char>(bytes[i * 4 + static_cast<std::size_t>(b)]);
        }
        const auto value = std::bit_cast<float>(word);
        if (!std::isfinite(value)) {
            throw FormatError("non-finite sample", path.string(), i * 4);
        }
        samples[i] = value;
    }
    return samples;
}

void write_f32le(const fs::path& path, const std::vector<double>& samples) {
    std::string bytes(samples.size() * 4, '\0');
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto word = std::bit_cast<std::uint32_t>(static_cast<float>(samples[i]));
        for (int b = 0; b < 4; ++b) {
            bytes[i * 4 + static_cast<std::size_t>(b)] = static_cast<char>((word >> (8 * b)) & 0xFFu);
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

SignalRecord load_record(const fs::path& dir) {
    const auto meta_path = dir / "meta";
    const auto meta = KeyValues::parse(read_file(meta_path), meta_path.string());

    SignalRecord record;
    record.subject_id = meta.get_string("subject_id", dir.filename().string());
    const auto rate = meta.get_int("sample_rate_hz", 0);
    if (rate <= 0) {
        throw FormatError("sample_rate_hz must be a positive integer", meta_path.string(), 0);
    }
    record.sample_rate_hz = static_cast<std::size_t>(rate);

    const auto channels = meta.get_list("channels");
    if (channels.empty()) {
        throw FormatError("channels list is empty", meta_path.string(), 0);
    }
    // Channel order is fixed as [eeg, emg].
    std::size_t expected_slot = 0;
    for (const auto& name : channels) {
        const std::size_t slot = name == "eeg" ? 0 : name == "emg" ? 1 : 2;
        if (slot == 2 || slot < expected_slot) {
            throw FormatError("channels must be a subset of [eeg, emg] in that order", meta_path.string(), 0);
        }
        expected_slot = slot + 1;
        record.channel(slot == 0 ? Modality::Eeg : Modality::Emg) = read_f32le(dir / (name + ".f32le"));
    }

    if (record.modalities().full() && record.eeg.size() != record.emg.size()) {
        const auto shorter = std::min(record.eeg.size(), record.emg.size());
        const auto path = record.eeg.size() < record.emg.size() ? dir / "eeg.f32le" : dir / "emg.f32le";
        throw FormatError("channel length mismatch (eeg " + std::to_string(record.eeg.size()) + " samples, emg " +
                              std::to_string(record.emg.size()) + ")",
                          path.string(), shorter * 4);
    }

    const auto labels_path = dir / "labels.txt";
    auto text = read_file(labels_path);
    if (!text.empty() && text.back() == '\n') {
        text.pop_back();
    }
    record.labels.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        const auto stage = stage_from_code(text[i]);
        if (!stage) {
            throw FormatError(std::string("invalid label character '") + text[i] + "'", labels_path.string(), i);
        }
        record.labels.push_back(*stage);
    }
    const std::size_t seconds = record.length() / record.sample_rate_hz;
    if (record.labels.size() != seconds) {
        throw FormatError("label count " + std::to_string(record.labels.size()) + " does not match " +
                              std::to_string(seconds) + " whole seconds of signal",
                          labels_path.string(), std::min(record.labels.size(), seconds));
    }
    return record;
}

void save_record(const SignalRecord& record, const fs::path& dir) {
    record.validate();
    fs::create_directories(dir);
    KeyValues meta;
    meta.set("subject_id", record.subject_id);
    meta.set("sample_rate_hz", record.sample_rate_hz);
    meta.set("channels", to_string(record.modalities()));
    {
        std::ofstream out(dir / "meta", std::ios::binary | std::ios::trunc);
        out << meta.format();
    }
    for (const auto m : kModalities) {
        if (record.modalities().has(m)) {
            write_f32le(dir / (std::string(to_string(m)) + ".f32le"), record.channel(m));
        }
    }
    std::string labels(record.labels.size(), '-');
    std::transform(record.labels.begin(), record.labels.end(), labels.begin(), stage_code);
    std::ofstream out(dir / "labels.txt", std::ios::binary | std::ios::trunc);
    out << labels;
}

std::vector<fs::path> list_subjects(const fs::path& root) {
    if (!fs::is_directory(root)) {
        throw DataError("data directory not found: " + root.string());
    }
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory() && fs::exists(entry.path() / "meta")) {
            dirs.push_back(entry.path());
        }
    }
    std::sort(dirs.begin(), dirs.end());
    return dirs;
}

unsigned thread_limit() {
    unsigned limit = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("SDREAMER_THREADS")) {
        const long requested = std::strtol(env, nullptr, 10);
        if (requested > 0) {
            limit = static_cast<unsigned>(requested);
        }
    }
    return limit;
}

std::vector<SignalRecord> load_records(const std::vector<fs::path>& dirs, unsigned threads) {
    std::vector<SignalRecord> records(dirs.size());
    std::vector<std::exception_ptr> failures(dirs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < dirs.size(); i = next++) {
            try {
                records[i] = load_record(dirs[i]);
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    const unsigned count = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(dirs.size())));
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < count; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    pool.clear();
    for (const auto& failure : failures) {
        if (failure) {
            std::rethrow_exception(failure);
        }
    }
    return records;
}

}  // namespace sdreamer::signal
