#include "sdreamer/signal/preprocess.hpp"

#include <cmath>

#include "sdreamer/common/error.hpp"
#include "sdreamer/common/log.hpp"

namespace sdreamer::signal {

std::pair<SignalRecord, NormalizationStats> normalize_subject(const SignalRecord& record) {
    record.validate();
    if (record.length() == 0) {
        throw DataError(record.subject_id + ": cannot normalise an empty record");
    }
    SignalRecord out = record;
    NormalizationStats stats;
    stats.subject_id = record.subject_id;
    for (const auto m : kModalities) {
        auto& samples = out.channel(m);
        if (samples.empty()) {
            continue;
        }
        const double n = static_cast<double>(samples.size());
        double mean = 0.0;
        for (const double v : samples) mean += v;
        mean /= n;
        double var = 0.0;
        for (const double v : samples) var += (v - mean) * (v - mean);
        const double sd = std::sqrt(var / n);
        if (sd < kMinChannelStd) {
            throw DataError(record.subject_id + ": degenerate (constant) " + std::string(to_string(m)) + " channel");
        }
        for (auto& v : samples) v = (v - mean) / sd;
        stats.channel(m) = ChannelStats{mean, sd, true};
    }
    return {std::move(out), stats};
}

std::vector<EpochSample> slice_epochs(const SignalRecord& record) {
    record.validate();
    const std::size_t t = record.sample_rate_hz;
    const std::size_t count = record.length() / t;
    if (count == 0) {
        throw DataError(record.subject_id + ": record is shorter than one epoch");
    }
    const auto present = record.modalities();
    std::vector<EpochSample> epochs(count);
    for (std::size_t i = 0; i < count; ++i) {
        auto& e = epochs[i];
        e.samples = t;
        e.modalities = present;
        e.label = record.labels[i];
        e.subject_id = record.subject_id;
        e.position = i;
        e.signal.assign(2 * t, 0.0);
        for (const auto m : kModalities) {
            if (!present.has(m)) continue;
            const auto& src = record.channel(m);
            std::copy_n(src.begin() + static_cast<long>(i * t), t,
                        e.signal.begin() + static_cast<long>(static_cast<std::size_t>(m) * t));
        }
    }
    return epochs;
}

namespace {

bool continues(const EpochSample& prev, const EpochSample& next) {
    return next.subject_id == prev.subject_id && next.position == prev.position + 1;
}

// [begin, end) ranges of contiguous same-subject epochs.
std::vector<std::pair<std::size_t, std::size_t>> runs(const std::vector<EpochSample>& epochs) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t begin = 0;
    for (std::size_t i = 1; i <= epochs.size(); ++i) {
        if (i == epochs.size() || !continues(epochs[i - 1], epochs[i])) {
            if (i > begin) out.emplace_back(begin, i);
            begin = i;
        }
    }
    return out;
}

}  // namespace

std::vector<std::size_t> sequence_windows(const std::vector<EpochSample>& epochs, std::size_t k, std::size_t stride) {
    if (k == 0 || stride == 0) {
        throw DataError("sequence length and stride must be positive");
    }
    std::vector<std::size_t> starts;
    for (const auto& [begin, end] : runs(epochs)) {
        for (std::size_t s = begin; s + k <= end; s += stride) {
            starts.push_back(s);
        }
    }
    if (starts.empty() && !epochs.empty()) {
        warn("no run of " + std::to_string(k) + " consecutive epochs; no sequences produced");
    }
    return starts;
}

std::vector<SequenceSample> make_sequences(const std::vector<EpochSample>& epochs, std::size_t k, std::size_t stride) {
    std::vector<SequenceSample> out;
    for (const auto start : sequence_windows(epochs, k, stride)) {
        SequenceSample seq;
        seq.epochs.assign(epochs.begin() + static_cast<long>(start), epochs.begin() + static_cast<long>(start + k));
        out.push_back(std::move(seq));
    }
    return out;
}

std::vector<TilingWindow> tiling_windows(const std::vector<EpochSample>& epochs, std::size_t k) {
    if (k == 0) {
        throw DataError("sequence length must be positive");
    }
    std::vector<TilingWindow> out;
    for (const auto& [begin, end] : runs(epochs)) {
        if (end - begin < k) {
            warn("skipping run of " + std::to_string(end - begin) + " epochs (shorter than K=" + std::to_string(k) + ")");
            continue;
        }
        std::size_t s = begin;
        for (; s + k <= end; s += k) {
            out.push_back({s, 0});
        }
        if (s < end) {
            // Last window is right-aligned; only its tail is new.
            out.push_back({end - k, s - (end - k)});
        }
    }
    return out;
}

PatchedEpoch patch(const EpochSample& epoch, std::size_t width) {
    if (width == 0 || width > epoch.samples) {
        throw ShapeError("invalid patch width " + std::to_string(width) + " for epochs of " +
                         std::to_string(epoch.samples) + " samples");
    }
    PatchedEpoch out;
    out.width = width;
    out.patch_count = epoch.samples / width;
    out.modalities = epoch.modalities;
    const std::size_t used = out.patch_count * width;
    out.patches.resize(2 * used);
    for (const auto m : kModalities) {
        const auto src = epoch.channel(m);
        std::copy_n(src.begin(), used, out.patches.begin() + static_cast<long>(static_cast<std::size_t>(m) * used));
    }
    return out;
}

}  // namespace sdreamer::signal
