#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace sdreamer {

// Input channels, always ordered [EEG, EMG].
enum class Modality : std::uint8_t { Eeg = 0, Emg = 1 };

inline constexpr std::array<Modality, 2> kModalities{Modality::Eeg, Modality::Emg};

struct ModalitySet {
    bool eeg = false;
    bool emg = false;

    static constexpr ModalitySet both() { return {true, true}; }
    static constexpr ModalitySet only(Modality m) { return {m == Modality::Eeg, m == Modality::Emg}; }

    constexpr bool has(Modality m) const { return m == Modality::Eeg ? eeg : emg; }
    constexpr bool empty() const { return !eeg && !emg; }
    constexpr bool full() const { return eeg && emg; }
    constexpr int count() const { return int(eeg) + int(emg); }
    constexpr bool operator==(const ModalitySet&) const = default;
};

std::string_view to_string(Modality m);
std::string to_string(ModalitySet set);
// Accepts "eeg", "emg" or a comma list such as "eeg,emg".
ModalitySet parse_modalities(std::string_view text);

// Per-second sleep stage annotation. The three scored classes map to class
// indices 0..2.
enum class Stage : std::uint8_t { Wake = 0, Sws = 1, Rem = 2, Unlabeled = 3 };

inline constexpr std::size_t kNumClasses = 3;

constexpr bool is_labeled(Stage s) { return s != Stage::Unlabeled; }
constexpr std::size_t class_index(Stage s) { return static_cast<std::size_t>(s); }
constexpr Stage stage_from_class(std::size_t c) { return static_cast<Stage>(c); }

char stage_code(Stage s);                      // W, S, R, -
std::optional<Stage> stage_from_code(char c);  // inverse of stage_code
std::string_view stage_name(Stage s);          // Wake, SWS, REM, Unlabeled

}  // namespace sdreamer
