#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace sdreamer::mome {

// Forward route through a MoME stack: one per input kind.
enum class Pathway { Eeg, Emg, Mix };

// Feed-forward experts a layer may hold.
enum class Expert { Eeg, Emg, Mix };

std::string_view to_string(Pathway p);
std::string_view to_string(Expert e);

// Static expert assignment psi(pathway, layer), layers numbered 1..L.
//
//   psi(eeg, l) = FFN_eeg and psi(emg, l) = FFN_emg for every layer.
//   psi(mix, l) for l < mix_start splits the mix tokens back into their EEG
//   and EMG halves, routes each half to its own modality expert and
//   re-concatenates; for l >= mix_start it is FFN_mix.
//
// A table built without a mix start has no (mix, l) entries at all.
class RoutingTable {
public:
    struct Route {
        enum class Kind { Single, SplitByModality };
        Kind kind = Kind::Single;
        Expert expert = Expert::Eeg;  // meaningful for Kind::Single

        bool operator==(const Route&) const = default;
    };

    RoutingTable(std::size_t layers, std::optional<std::size_t> mix_start_layer);

    std::size_t layers() const noexcept { return layers_; }
    std::optional<std::size_t> mix_start_layer() const noexcept { return mix_start_; }

    bool defined(Pathway pathway, std::size_t layer) const;
    // Throws RoutingError outside the declared domain.
    Route route(Pathway pathway, std::size_t layer) const;
    // Experts instantiated at `layer`, in [eeg, emg, mix] order.
    std::vector<Expert> experts_at(std::size_t layer) const;

private:
    std::size_t layers_;
    std::optional<std::size_t> mix_start_;
};

}  // namespace sdreamer::mome
