#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "sdreamer/common/modality.hpp"
#include "sdreamer/models/config.hpp"
#include "sdreamer/mome/embedding.hpp"
#include "sdreamer/mome/routing.hpp"
#include "sdreamer/mome/stack.hpp"

namespace sdreamer::models {

using mome::Pathway;
using tensor::Tensor;

// Model input. Epoch models take patches [B, P, W] per modality, sequence
// models [B, K, P, W]. A missing modality is an undefined tensor. `labels`
// holds one entry per output position (B, or B * K flattened row-major).
struct Batch {
    Tensor eeg;
    Tensor emg;
    std::vector<Stage> labels;

    ModalitySet modalities() const { return {eeg.defined(), emg.defined()}; }
    const Tensor& input(Modality m) const { return m == Modality::Eeg ? eeg : emg; }
};

struct PathwaySet {
    bool eeg = false;
    bool emg = false;
    bool mix = false;

    static constexpr PathwaySet all() { return {true, true, true}; }
    static constexpr PathwaySet only(Pathway p) {
        return {p == Pathway::Eeg, p == Pathway::Emg, p == Pathway::Mix};
    }
    constexpr bool has(Pathway p) const { return p == Pathway::Eeg ? eeg : p == Pathway::Emg ? emg : mix; }
};

struct PathwayTensors {
    Tensor eeg;
    Tensor emg;
    Tensor mix;

    const Tensor& at(Pathway p) const { return p == Pathway::Eeg ? eeg : p == Pathway::Emg ? emg : mix; }
    Tensor& at(Pathway p) { return p == Pathway::Eeg ? eeg : p == Pathway::Emg ? emg : mix; }
};

// Per requested pathway: logits [N, 3] and the head inputs that produced
// them, [N, D] for EEG/EMG and [N, 2D] for MIX (N = B or B * K).
struct ForwardResult {
    PathwayTensors logits;
    PathwayTensors features;
};

class Model {
public:
    virtual ~Model() = default;

    virtual const ModelConfig& config() const = 0;
    ModelKind kind() const { return config().kind; }

    // Errors with DataError when a requested pathway needs a modality the
    // batch does not carry.
    virtual ForwardResult forward(const Batch& batch, PathwaySet pathways,
                                  const mome::ForwardContext* ctx = nullptr) const = 0;

    // Every trainable tensor with a stable, unique name.
    virtual mome::ParameterList parameters() const = 0;
};

// Pathway-specific classification head input -> n_classes.
struct Heads {
    mome::Linear eeg;
    mome::Linear emg;
    mome::Linear mix;  // takes the feature-axis concatenation of two tokens

    static Heads init(std::size_t dim, std::size_t classes, std::mt19937_64& rng);
    const mome::Linear& at(Pathway p) const { return p == Pathway::Eeg ? eeg : p == Pathway::Emg ? emg : mix; }
    void collect(const std::string& prefix, mome::ParameterList& out) const;
};

class EpochModel final : public Model {
public:
    EpochModel(const ModelConfig& config, std::mt19937_64& rng);

    const ModelConfig& config() const override { return config_; }
    ForwardResult forward(const Batch& batch, PathwaySet pathways,
                          const mome::ForwardContext* ctx = nullptr) const override;
    mome::ParameterList parameters() const override;

    const mome::MoMEStack& stack() const { return stack_; }
    mome::MoMEStack& stack() { return stack_; }
    const mome::ModalityEmbedding& embedding(Modality m) const { return m == Modality::Eeg ? eeg_embed_ : emg_embed_; }
    const Heads& heads() const { return heads_; }

private:
    ModelConfig config_;
    mome::ModalityEmbedding eeg_embed_;
    mome::ModalityEmbedding emg_embed_;
    mome::MoMEStack stack_;
    Heads heads_;
};

class SequenceModel final : public Model {
public:
    SequenceModel(const ModelConfig& config, std::mt19937_64& rng);

    const ModelConfig& config() const override { return config_; }
    ForwardResult forward(const Batch& batch, PathwaySet pathways,
                          const mome::ForwardContext* ctx = nullptr) const override;
    mome::ParameterList parameters() const override;

    // Patches [B, K, P, W] of one modality -> Z0 [B, K, D]: per-epoch CLS
    // outputs of the epoch-level stack plus the sequence positional table.
    Tensor encode_epochs(const Tensor& patches, Modality modality, const mome::ForwardContext* ctx = nullptr) const;

    const mome::MoMEStack& epoch_stack() const { return epoch_stack_; }
    const mome::MoMEStack& sequence_stack() const { return seq_stack_; }
    const mome::ModalityEmbedding& embedding(Modality m) const { return m == Modality::Eeg ? eeg_embed_ : emg_embed_; }
    const Tensor& sequence_position(Modality m) const { return m == Modality::Eeg ? seq_pos_eeg_ : seq_pos_emg_; }
    const Heads& heads() const { return heads_; }

private:
    ModelConfig config_;
    mome::ModalityEmbedding eeg_embed_;
    mome::ModalityEmbedding emg_embed_;
    mome::MoMEStack epoch_stack_;
    Tensor seq_pos_eeg_;  // [K, D]
    Tensor seq_pos_emg_;  // [K, D]
    mome::MoMEStack seq_stack_;
    Heads heads_;
};

// Builds a freshly initialised model. Same (config, seed) -> same weights.
std::unique_ptr<Model> make_model(const ModelConfig& config, std::uint64_t seed);

}  // namespace sdreamer::models
