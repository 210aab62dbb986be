#include "sdreamer/common/modality.hpp"

#include "sdreamer/common/error.hpp"
#include "sdreamer/common/keyvalue.hpp"

namespace sdreamer {

std::string_view to_string(Modality m) { return m == Modality::Eeg ? "eeg" : "emg"; }

std::string to_string(ModalitySet set) {
    if (set.full()) return "eeg,emg";
    if (set.eeg) return "eeg";
    if (set.emg) return "emg";
    return "";
}

ModalitySet parse_modalities(std::string_view text) {
    ModalitySet set;
    for (const auto& item : split_list(text)) {
        if (item == "eeg") {
            set.eeg = true;
        } else if (item == "emg") {
            set.emg = true;
        } else {
            throw ConfigError("unknown modality '" + item + "'");
        }
    }
    return set;
}

char stage_code(Stage s) {
    switch (s) {
        case Stage::Wake: return 'W';
        case Stage::Sws: return 'S';
        case Stage::Rem: return 'R';
        case Stage::Unlabeled: return '-';
    }
    return '-';
}

std::optional<Stage> stage_from_code(char c) {
    switch (c) {
        case 'W': return Stage::Wake;
        case 'S': return Stage::Sws;
        case 'R': return Stage::Rem;
        case '-': return Stage::Unlabeled;
        default: return std::nullopt;
    }
}

std::string_view stage_name(Stage s) {
    switch (s) {
        case Stage::Wake: return "Wake";
        case Stage::Sws: return "SWS";
        case Stage::Rem: return "REM";
        case Stage::Unlabeled: return "Unlabeled";
    }
    return "Unlabeled";
}

}  // namespace sdreamer
