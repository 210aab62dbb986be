#pragma once

#include <cstddef>
#include <string>

#include "sdreamer/common/keyvalue.hpp"
#include "sdreamer/mome/layers.hpp"

namespace sdreamer::models {

enum class ModelKind { Epoch, Sequence };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);

// Architecture of either model kind. Fields under "epoch model" apply to
// ModelKind::Epoch only, fields under "sequence model" to ModelKind::Sequence.
struct ModelConfig {
    ModelKind kind = ModelKind::Epoch;

    std::size_t dim = 128;
    std::size_t heads = 4;
    std::size_t ffn_dim = 512;
    std::size_t patch_width = 16;
    std::size_t samples_per_epoch = 512;  // T, one second at the sample rate
    std::size_t n_classes = 3;
    mome::Activation activation = mome::Activation::Gelu;
    bool use_pos_encoding = true;
    bool use_mod_encoding = true;
    double dropout = 0.0;

    // epoch model
    std::size_t layers = 4;
    std::size_t mix_start_layer = 4;

    // sequence model
    std::size_t epoch_layers = 2;
    std::size_t seq_layers = 3;
    std::size_t seq_mix_start_layer = 3;
    std::size_t seq_len = 16;  // K

    std::size_t patch_count() const { return samples_per_epoch / patch_width; }

    // Throws ConfigError listing every offending field.
    void validate() const;

    // Keys are written without a prefix; callers nest them (e.g. "model.").
    KeyValues to_kv() const;
    static ModelConfig from_kv(const KeyValues& kv);

    static ModelConfig epoch_defaults();
    static ModelConfig sequence_defaults();
};

}  // namespace sdreamer::models
