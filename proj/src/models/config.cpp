#include "sdreamer/models/config.hpp"

#include <vector>

#include "sdreamer/common/error.hpp"

namespace sdreamer::models {

std::string to_string(ModelKind kind) { return kind == ModelKind::Epoch ? "epoch" : "sequence"; }

ModelKind parse_model_kind(const std::string& text) {
    if (text == "epoch") return ModelKind::Epoch;
    if (text == "sequence") return ModelKind::Sequence;
    throw ConfigError("model.kind: expected 'epoch' or 'sequence', got '" + text + "'");
}

void ModelConfig::validate() const {
    std::vector<std::string> problems;
    if (dim == 0) problems.push_back("model.dim must be positive");
    if (heads == 0 || (dim % heads) != 0) problems.push_back("model.heads must divide model.dim");
    if (ffn_dim == 0) problems.push_back("model.ffn_dim must be positive");
    if (patch_width == 0 || patch_width > samples_per_epoch) {
        problems.push_back("model.patch_width must lie in 1..model.samples_per_epoch");
    }
    if (n_classes != 3) problems.push_back("model.n_classes must be 3");
    if (dropout < 0.0 || dropout >= 1.0) problems.push_back("model.dropout must lie in [0, 1)");
    if (kind == ModelKind::Epoch) {
        if (layers == 0) problems.push_back("model.layers must be positive");
        if (mix_start_layer < 1 || mix_start_layer > layers) {
            problems.push_back("model.mix_start_layer must lie in 1..model.layers");
        }
    } else {
        if (seq_layers == 0) problems.push_back("model.seq_layers must be positive");
        if (seq_mix_start_layer < 1 || seq_mix_start_layer > seq_layers) {
            problems.push_back("model.seq_mix_start_layer must lie in 1..model.seq_layers");
        }
        if (seq_len == 0) problems.push_back("model.seq_len must be positive");
    }
    if (!problems.empty()) {
        std::string message = "invalid model config:";
        for (const auto& p : problems) message += "\n  " + p;
        throw ConfigError(message);
    }
}

KeyValues ModelConfig::to_kv() const {
    KeyValues kv;
    kv.set("kind", to_string(kind));
    kv.set("dim", dim);
    kv.set("heads", heads);
    kv.set("ffn_dim", ffn_dim);
    kv.set("patch_width", patch_width);
    kv.set("samples_per_epoch", samples_per_epoch);
    kv.set("n_classes", n_classes);
    kv.set("activation", activation == mome::Activation::Gelu ? "gelu" : "relu");
    kv.set("use_pos_encoding", use_pos_encoding);
    kv.set("use_mod_encoding", use_mod_encoding);
    kv.set("dropout", dropout);
    kv.set("layers", layers);
    kv.set("mix_start_layer", mix_start_layer);
    kv.set("epoch_layers", epoch_layers);
    kv.set("seq_layers", seq_layers);
    kv.set("seq_mix_start_layer", seq_mix_start_layer);
    kv.set("seq_len", seq_len);
    return kv;
}

namespace {

std::size_t get_size(const KeyValues& kv, const std::string& key, std::size_t fallback) {
    const auto v = kv.get_int(key, static_cast<std::int64_t>(fallback));
    if (v < 0) {
        throw ConfigError("model." + key + " must be non-negative");
    }
    return static_cast<std::size_t>(v);
}

}  // namespace

ModelConfig ModelConfig::from_kv(const KeyValues& kv) {
    ModelConfig c;
    c.kind = parse_model_kind(kv.get_string("kind", "epoch"));
    c.dim = get_size(kv, "dim", c.dim);
    c.heads = get_size(kv, "heads", c.heads);
    c.ffn_dim = get_size(kv, "ffn_dim", c.ffn_dim);
    c.patch_width = get_size(kv, "patch_width", c.patch_width);
    c.samples_per_epoch = get_size(kv, "samples_per_epoch", c.samples_per_epoch);
    c.n_classes = get_size(kv, "n_classes", c.n_classes);
    const auto act = kv.get_string("activation", "gelu");
    if (act == "gelu") {
        c.activation = mome::Activation::Gelu;
    } else if (act == "relu") {
        c.activation = mome::Activation::Relu;
    } else {
        throw ConfigError("model.activation: expected 'gelu' or 'relu', got '" + act + "'");
    }
    c.use_pos_encoding = kv.get_bool("use_pos_encoding", c.use_pos_encoding);
    c.use_mod_encoding = kv.get_bool("use_mod_encoding", c.use_mod_encoding);
    c.dropout = kv.get_double("dropout", c.dropout);
    c.layers = get_size(kv, "layers", c.layers);
    c.mix_start_layer = get_size(kv, "mix_start_layer", c.mix_start_layer);
    c.epoch_layers = get_size(kv, "epoch_layers", c.epoch_layers);
    c.seq_layers = get_size(kv, "seq_layers", c.seq_layers);
    c.seq_mix_start_layer = get_size(kv, "seq_mix_start_layer", c.seq_mix_start_layer);
    c.seq_len = get_size(kv, "seq_len", c.seq_len);
    return c;
}

ModelConfig ModelConfig::epoch_defaults() { return ModelConfig{}; }

ModelConfig ModelConfig::sequence_defaults() {
    ModelConfig c;
    c.kind = ModelKind::Sequence;
    return c;
}

}  // namespace sdreamer::models
