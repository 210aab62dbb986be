#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "sdreamer/mome/layers.hpp"
#include "sdreamer/mome/routing.hpp"

namespace sdreamer::mome {

// One MoME layer: a single self-attention block used by every pathway plus
// the modality experts present at this depth.
struct MoMELayer {
    LayerNorm attention_norm;
    SelfAttention attention;
    LayerNorm ffn_norm;
    std::map<Expert, FeedForward> experts;
};

struct StackConfig {
    std::size_t layers = 4;
    std::size_t dim = 128;
    std::size_t heads = 4;
    std::size_t ffn_dim = 512;
    std::optional<std::size_t> mix_start_layer = 4;  // nullopt: no mix pathway
    Activation activation = Activation::Gelu;
};

class MoMEStack {
public:
    MoMEStack(const StackConfig& config, std::mt19937_64& rng);

    const StackConfig& config() const noexcept { return config_; }
    const RoutingTable& routing() const noexcept { return routing_; }
    std::size_t depth() const noexcept { return layers_.size(); }
    const MoMELayer& layer(std::size_t index) const { return layers_.at(index - 1); }  // 1-based
    MoMELayer& layer(std::size_t index) { return layers_.at(index - 1); }

    // One layer (1-based index):
    //   I   = MSA(LN(x)) + x
    //   out = psi(pathway, layer)(LN(I)) + I
    // For the mix pathway, `eeg_tokens` is the length of the leading EEG
    // half of the token axis (used by split routing).
    Tensor layer_forward(const Tensor& tokens, Pathway pathway, std::size_t layer, std::size_t eeg_tokens = 0,
                         const ForwardContext* ctx = nullptr) const;

    // Applies layers 1..L in order; the identity when L = 0.
    Tensor forward(const Tensor& tokens, Pathway pathway, std::size_t eeg_tokens = 0,
                   const ForwardContext* ctx = nullptr) const;

    void collect(const std::string& prefix, ParameterList& out) const;

private:
    StackConfig config_;
    RoutingTable routing_;
    std::vector<MoMELayer> layers_;
};

}  // namespace sdreamer::mome
