#include "sdreamer/signal/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "sdreamer/common/error.hpp"

namespace sdreamer::signal {

void SynthConfig::validate() const {
    if (sample_rate_hz == 0) {
        throw ConfigError("sample_rate_hz must be positive");
    }
    for (std::size_t r = 0; r < 3; ++r) {
        double total = 0.0;
        for (const double p : transition[r]) {
            if (!(p >= 0.0)) {
                throw ConfigError("transition matrix row " + std::to_string(r) + " (" +
                                  std::string(stage_name(stage_from_class(r))) + ") has a negative entry");
            }
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9) {
            char buffer[32];
            std::snprintf(buffer, sizeof(buffer), "%.12g", total);
            throw ConfigError("transition matrix row " + std::to_string(r) + " (" +
                              std::string(stage_name(stage_from_class(r))) + ") sums to " + buffer + ", not 1");
        }
    }
    if (initial_stage && !is_labeled(*initial_stage)) {
        throw ConfigError("initial stage must be Wake, SWS or REM");
    }
    if (unlabeled_rate < 0.0 || unlabeled_rate > 1.0) {
        throw ConfigError("unlabeled_rate must lie in [0, 1]");
    }
}

TransitionMatrix parse_transition_matrix(const std::vector<double>& values) {
    if (values.size() != 9) {
        throw ConfigError("transition matrix needs 9 values, got " + std::to_string(values.size()));
    }
    TransitionMatrix m{};
    for (std::size_t i = 0; i < 9; ++i) {
        m[i / 3][i % 3] = values[i];
    }
    return m;
}

namespace {

SignalRecord generate_subject(std::size_t index, std::size_t seconds, std::uint64_t seed, const SynthConfig& cfg) {
    std::seed_seq seq{seed, static_cast<std::uint64_t>(index), std::uint64_t{0x5d7e}};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> gaussian(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    SignalRecord rec;
    char name[32];
    std::snprintf(name, sizeof(name), "subject_%03zu", index);
    rec.subject_id = name;
    rec.sample_rate_hz = cfg.sample_rate_hz;

    const double eeg_gain = std::exp(cfg.subject_gain_spread * gaussian(rng));
    const double emg_gain = std::exp(cfg.subject_gain_spread * gaussian(rng));
    const double eeg_offset = 0.2 * gaussian(rng);
    const double emg_offset = 0.2 * gaussian(rng);

    std::size_t state = cfg.initial_stage ? class_index(*cfg.initial_stage)
                                          : static_cast<std::size_t>(std::min(2.0, std::floor(3.0 * unit(rng))));
    const std::size_t t = cfg.sample_rate_hz;
    rec.eeg.resize(seconds * t);
    rec.emg.resize(seconds * t);
    rec.labels.resize(seconds);
    double phase = 2.0 * std::numbers::pi * unit(rng);
    for (std::size_t s = 0; s < seconds; ++s) {
        if (s > 0) {
            const double u = unit(rng);
            const auto& row = cfg.transition[state];
            std::size_t next = 0;
            double acc = row[0];
            while (next < 2 && u >= acc) {
                ++next;
                acc += row[next];
            }
            state = next;
        }
        const auto& sig = cfg.signatures[state];
        const double jitter_a = 1.0 + cfg.amplitude_jitter * (2.0 * unit(rng) - 1.0);
        const double jitter_f = 1.0 + cfg.frequency_jitter * (2.0 * unit(rng) - 1.0);
        const double jitter_m = 1.0 + cfg.amplitude_jitter * (2.0 * unit(rng) - 1.0);
        const double step = 2.0 * std::numbers::pi * sig.eeg_frequency_hz * jitter_f / static_cast<double>(t);
        for (std::size_t i = 0; i < t; ++i) {
            phase += step;
            const double eeg = sig.eeg_amplitude * jitter_a * std::sin(phase) + cfg.eeg_noise * gaussian(rng);
            const double emg = sig.emg_amplitude * jitter_m * gaussian(rng);
            rec.eeg[s * t + i] = eeg_offset + eeg_gain * eeg;
            rec.emg[s * t + i] = emg_offset + emg_gain * emg;
        }
        phase = std::fmod(phase, 2.0 * std::numbers::pi);
        const bool hidden = cfg.unlabeled_rate > 0.0 && unit(rng) < cfg.unlabeled_rate;
        rec.labels[s] = hidden ? Stage::Unlabeled : stage_from_class(state);
    }
    return rec;
}

}  // namespace

std::vector<SignalRecord> synth_generate(std::size_t n_subjects, std::size_t seconds_per_subject, std::uint64_t seed,
                                         const SynthConfig& config) {
    config.validate();
    if (n_subjects == 0 || seconds_per_subject == 0) {
        throw ConfigError("subject count and seconds per subject must be positive");
    }
    std::vector<SignalRecord> records;
    records.reserve(n_subjects);
    for (std::size_t i = 0; i < n_subjects; ++i) {
        records.push_back(generate_subject(i, seconds_per_subject, seed, config));
    }
    return records;
}

}  // namespace sdreamer::signal
