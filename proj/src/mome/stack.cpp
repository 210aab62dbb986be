#include "sdreamer/mome/stack.hpp"

#include "sdreamer/common/error.hpp"
#include "sdreamer/tensor/ops.hpp"

namespace sdreamer::mome {

namespace ops = sdreamer::tensor;

MoMEStack::MoMEStack(const StackConfig& config, std::mt19937_64& rng)
    : config_(config), routing_(config.layers, config.mix_start_layer) {
    layers_.reserve(config.layers);
    for (std::size_t l = 1; l <= config.layers; ++l) {
        MoMELayer layer{LayerNorm::init(config.dim), SelfAttention::init(config.dim, config.heads, rng),
                        LayerNorm::init(config.dim), {}};
        for (const auto expert : routing_.experts_at(l)) {
            layer.experts.emplace(expert, FeedForward::init(config.dim, config.ffn_dim, config.activation, rng));
        }
        layers_.push_back(std::move(layer));
    }
}

Tensor MoMEStack::layer_forward(const Tensor& tokens, Pathway pathway, std::size_t layer, std::size_t eeg_tokens,
                                const ForwardContext* ctx) const {
    const auto route = routing_.route(pathway, layer);
    const auto& params = layers_.at(layer - 1);

    const auto attended = apply_dropout(msa_forward(params.attention_norm.forward(tokens), params.attention), ctx);
    const auto inner = ops::add(tokens, attended);
    const auto normed = params.ffn_norm.forward(inner);

    Tensor expert_out;
    if (route.kind == RoutingTable::Route::Kind::Single) {
        expert_out = params.experts.at(route.expert).forward(normed);
    } else {
        const int token_axis = static_cast<int>(normed.rank()) - 2;
        const std::size_t total = normed.dim(token_axis);
        if (eeg_tokens == 0 || eeg_tokens >= total) {
            throw ShapeError("mix tokens need a non-empty EEG half and EMG half (eeg_tokens=" +
                             std::to_string(eeg_tokens) + ", total=" + std::to_string(total) + ")");
        }
        const auto halves = ops::split(normed, {eeg_tokens, total - eeg_tokens}, token_axis);
        expert_out = ops::concat(
            {params.experts.at(Expert::Eeg).forward(halves[0]), params.experts.at(Expert::Emg).forward(halves[1])},
            token_axis);
    }
    return ops::add(inner, apply_dropout(expert_out, ctx));
}

Tensor MoMEStack::forward(const Tensor& tokens, Pathway pathway, std::size_t eeg_tokens,
                          const ForwardContext* ctx) const {
    Tensor x = tokens;
    for (std::size_t l = 1; l <= layers_.size(); ++l) {
        x = layer_forward(x, pathway, l, eeg_tokens, ctx);
    }
    return x;
}

void MoMEStack::collect(const std::string& prefix, ParameterList& out) const {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto base = prefix + ".layers." + std::to_string(l + 1);
        layers_[l].attention_norm.collect(base + ".attention_norm", out);
        layers_[l].attention.collect(base + ".attention", out);
        layers_[l].ffn_norm.collect(base + ".ffn_norm", out);
        for (const auto& [expert, ffn] : layers_[l].experts) {
            ffn.collect(base + ".experts." + std::string(to_string(expert)), out);
        }
    }
}

}  // namespace sdreamer::mome
