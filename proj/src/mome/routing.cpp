#include "sdreamer/mome/routing.hpp"

#include <string>

#include "sdreamer/common/error.hpp"

namespace sdreamer::mome {

std::string_view to_string(Pathway p) {
    switch (p) {
        case Pathway::Eeg: return "eeg";
        case Pathway::Emg: return "emg";
        case Pathway::Mix: return "mix";
    }
    return "?";
}

std::string_view to_string(Expert e) {
    switch (e) {
        case Expert::Eeg: return "eeg";
        case Expert::Emg: return "emg";
        case Expert::Mix: return "mix";
    }
    return "?";
}

RoutingTable::RoutingTable(std::size_t layers, std::optional<std::size_t> mix_start_layer)
    : layers_(layers), mix_start_(mix_start_layer) {
    if (mix_start_ && (*mix_start_ < 1 || *mix_start_ > layers_)) {
        throw ConfigError("mix start layer " + std::to_string(*mix_start_) + " outside 1.." + std::to_string(layers_));
    }
}

bool RoutingTable::defined(Pathway pathway, std::size_t layer) const {
    if (layer < 1 || layer > layers_) {
        return false;
    }
    return pathway != Pathway::Mix || mix_start_.has_value();
}

RoutingTable::Route RoutingTable::route(Pathway pathway, std::size_t layer) const {
    if (!defined(pathway, layer)) {
        throw RoutingError("no expert routed for (" + std::string(to_string(pathway)) + ", layer " +
                           std::to_string(layer) + ")");
    }
    switch (pathway) {
        case Pathway::Eeg: return {Route::Kind::Single, Expert::Eeg};
        case Pathway::Emg: return {Route::Kind::Single, Expert::Emg};
        case Pathway::Mix:
            if (layer < *mix_start_) {
                return {Route::Kind::SplitByModality, Expert::Eeg};
            }
            return {Route::Kind::Single, Expert::Mix};
    }
    throw RoutingError("unknown pathway");
}

std::vector<Expert> RoutingTable::experts_at(std::size_t layer) const {
    if (layer < 1 || layer > layers_) {
        throw RoutingError("layer " + std::to_string(layer) + " outside 1.." + std::to_string(layers_));
    }
    std::vector<Expert> experts{Expert::Eeg, Expert::Emg};
    if (mix_start_ && layer >= *mix_start_) {
        experts.push_back(Expert::Mix);
    }
    return experts;
}

}  // namespace sdreamer::mome
