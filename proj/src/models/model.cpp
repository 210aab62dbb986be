#include "sdreamer/models/model.hpp"

#include "sdreamer/common/error.hpp"
#include "sdreamer/tensor/ops.hpp"

namespace sdreamer::models {

namespace ops = sdreamer::tensor;

namespace {

void require_inputs(const Batch& batch, PathwaySet pathways) {
    if (pathways.eeg && !batch.eeg.defined()) throw DataError("EEG pathway requested but the batch has no EEG input");
    if (pathways.emg && !batch.emg.defined()) throw DataError("EMG pathway requested but the batch has no EMG input");
    if (pathways.mix && !(batch.eeg.defined() && batch.emg.defined())) {
        throw DataError("MIX pathway requested but the batch carries only " + to_string(batch.modalities()));
    }
    if (!pathways.eeg && !pathways.emg && !pathways.mix) throw DataError("no pathway requested");
}

void check_patches(const Tensor& t, std::size_t rank, const ModelConfig& cfg, const char* what) {
    if (!t.defined()) return;
    if (t.rank() != rank) {
        throw ShapeError(std::string(what) + " input has shape " + tensor::to_string(t.shape()) + ", expected rank " +
                         std::to_string(rank));
    }
    if (t.dim(-1) != cfg.patch_width || t.dim(-2) != cfg.patch_count()) {
        throw ShapeError(std::string(what) + " patches " + tensor::to_string(t.shape()) + " do not match P=" +
                         std::to_string(cfg.patch_count()) + ", W=" + std::to_string(cfg.patch_width));
    }
}

// Row `index` of the token axis of [B, N, D] -> [B, D].
Tensor token_at(const Tensor& tokens, std::size_t index) {
    const auto row = ops::narrow(tokens, 1, index, 1);
    return ops::reshape(row, {tokens.dim(0), tokens.dim(2)});
}

mome::StackConfig stack_config(const ModelConfig& cfg, std::size_t layers, std::optional<std::size_t> mix_start) {
    mome::StackConfig s;
    s.layers = layers;
    s.dim = cfg.dim;
    s.heads = cfg.heads;
    s.ffn_dim = cfg.ffn_dim;
    s.mix_start_layer = mix_start;
    s.activation = cfg.activation;
    return s;
}

mome::EncodingSwitches switches(const ModelConfig& cfg) { return {cfg.use_pos_encoding, cfg.use_mod_encoding}; }

}  // namespace

Heads Heads::init(std::size_t dim, std::size_t classes, std::mt19937_64& rng) {
    Heads h;
    h.eeg = mome::Linear::init(dim, classes, rng);
    h.emg = mome::Linear::init(dim, classes, rng);
    h.mix = mome::Linear::init(2 * dim, classes, rng);
    return h;
}

void Heads::collect(const std::string& prefix, mome::ParameterList& out) const {
    eeg.collect(prefix + ".eeg", out);
    emg.collect(prefix + ".emg", out);
    mix.collect(prefix + ".mix", out);
}

// Member initialisation order fixes the RNG draw order, which makes the
// weights a pure function of (config, seed).
EpochModel::EpochModel(const ModelConfig& config, std::mt19937_64& rng)
    : config_((config.validate(), config)),
      eeg_embed_(mome::ModalityEmbedding::init(config.patch_width, config.patch_count(), config.dim, rng)),
      emg_embed_(mome::ModalityEmbedding::init(config.patch_width, config.patch_count(), config.dim, rng)),
      stack_(stack_config(config, config.layers, config.mix_start_layer), rng),
      heads_(Heads::init(config.dim, config.n_classes, rng)) {
    if (config.kind != ModelKind::Epoch) throw ConfigError("EpochModel needs model.kind = epoch");
}

ForwardResult EpochModel::forward(const Batch& batch, PathwaySet pathways, const mome::ForwardContext* ctx) const {
    require_inputs(batch, pathways);
    check_patches(batch.eeg, 3, config_, "EEG");
    check_patches(batch.emg, 3, config_, "EMG");

    const bool need_eeg = pathways.eeg || pathways.mix;
    const bool need_emg = pathways.emg || pathways.mix;
    const auto sw = switches(config_);
    const Tensor eeg_tokens = need_eeg ? mome::apply_dropout(mome::embed_patches(batch.eeg, eeg_embed_, sw), ctx) : Tensor{};
    const Tensor emg_tokens = need_emg ? mome::apply_dropout(mome::embed_patches(batch.emg, emg_embed_, sw), ctx) : Tensor{};

    ForwardResult result;
    if (pathways.eeg) {
        const auto out = stack_.forward(eeg_tokens, Pathway::Eeg, 0, ctx);
        result.features.eeg = token_at(out, 0);
        result.logits.eeg = heads_.eeg.forward(result.features.eeg);
    }
    if (pathways.emg) {
        const auto out = stack_.forward(emg_tokens, Pathway::Emg, 0, ctx);
        result.features.emg = token_at(out, 0);
        result.logits.emg = heads_.emg.forward(result.features.emg);
    }
    if (pathways.mix) {
        if (batch.eeg.dim(0) != batch.emg.dim(0)) throw ShapeError("EEG and EMG batch sizes differ");
        const std::size_t n = eeg_tokens.dim(1);
        const auto out = stack_.forward(ops::concat({eeg_tokens, emg_tokens}, 1), Pathway::Mix, n, ctx);
        result.features.mix = ops::concat({token_at(out, 0), token_at(out, n)}, 1);
        result.logits.mix = heads_.mix.forward(result.features.mix);
    }
    return result;
}

mome::ParameterList EpochModel::parameters() const {
    mome::ParameterList out;
    eeg_embed_.collect("embed.eeg", out);
    emg_embed_.collect("embed.emg", out);
    stack_.collect("stack", out);
    heads_.collect("head", out);
    return out;
}

SequenceModel::SequenceModel(const ModelConfig& config, std::mt19937_64& rng)
    : config_((config.validate(), config)),
      eeg_embed_(mome::ModalityEmbedding::init(config.patch_width, config.patch_count(), config.dim, rng)),
      emg_embed_(mome::ModalityEmbedding::init(config.patch_width, config.patch_count(), config.dim, rng)),
      epoch_stack_(stack_config(config, config.epoch_layers, std::nullopt), rng),
      seq_pos_eeg_(mome::trunc_normal({config.seq_len, config.dim}, rng)),
      seq_pos_emg_(mome::trunc_normal({config.seq_len, config.dim}, rng)),
      seq_stack_(stack_config(config, config.seq_layers, config.seq_mix_start_layer), rng),
      heads_(Heads::init(config.dim, config.n_classes, rng)) {
    if (config.kind != ModelKind::Sequence) throw ConfigError("SequenceModel needs model.kind = sequence");
}

Tensor SequenceModel::encode_epochs(const Tensor& patches, Modality modality, const mome::ForwardContext* ctx) const {
    check_patches(patches, 4, config_, modality == Modality::Eeg ? "EEG" : "EMG");
    const std::size_t b = patches.dim(0);
    const std::size_t k = patches.dim(1);
    if (k > config_.seq_len) {
        throw ShapeError("sequence length " + std::to_string(k) + " exceeds model.seq_len " +
                         std::to_string(config_.seq_len));
    }
    const auto flat = ops::reshape(patches, {b * k, patches.dim(2), patches.dim(3)});
    const auto& embed = modality == Modality::Eeg ? eeg_embed_ : emg_embed_;
    const auto tokens = mome::apply_dropout(mome::embed_patches(flat, embed, switches(config_)), ctx);
    const auto pathway = modality == Modality::Eeg ? Pathway::Eeg : Pathway::Emg;
    const auto encoded = epoch_stack_.forward(tokens, pathway, 0, ctx);
    const auto cls = ops::reshape(token_at(encoded, 0), {b, k, config_.dim});
    const auto& table = modality == Modality::Eeg ? seq_pos_eeg_ : seq_pos_emg_;
    return ops::add(cls, k == config_.seq_len ? table : ops::narrow(table, 0, 0, k));
}

ForwardResult SequenceModel::forward(const Batch& batch, PathwaySet pathways, const mome::ForwardContext* ctx) const {
    require_inputs(batch, pathways);
    const bool need_eeg = pathways.eeg || pathways.mix;
    const bool need_emg = pathways.emg || pathways.mix;
    const Tensor z_eeg = need_eeg ? encode_epochs(batch.eeg, Modality::Eeg, ctx) : Tensor{};
    const Tensor z_emg = need_emg ? encode_epochs(batch.emg, Modality::Emg, ctx) : Tensor{};
    const auto& ref = need_eeg ? z_eeg : z_emg;
    const std::size_t b = ref.dim(0);
    const std::size_t k = ref.dim(1);
    const std::size_t d = config_.dim;

    ForwardResult result;
    if (pathways.eeg) {
        const auto out = seq_stack_.forward(z_eeg, Pathway::Eeg, 0, ctx);
        result.features.eeg = ops::reshape(out, {b * k, d});
        result.logits.eeg = heads_.eeg.forward(result.features.eeg);
    }
    if (pathways.emg) {
        const auto out = seq_stack_.forward(z_emg, Pathway::Emg, 0, ctx);
        result.features.emg = ops::reshape(out, {b * k, d});
        result.logits.emg = heads_.emg.forward(result.features.emg);
    }
    if (pathways.mix) {
        if (z_eeg.shape() != z_emg.shape()) throw ShapeError("EEG and EMG sequence batches differ in shape");
        const auto out = seq_stack_.forward(ops::concat({z_eeg, z_emg}, 1), Pathway::Mix, k, ctx);
        const auto halves = ops::split(out, {k, k}, 1);
        result.features.mix = ops::reshape(ops::concat({halves[0], halves[1]}, 2), {b * k, 2 * d});
        result.logits.mix = heads_.mix.forward(result.features.mix);
    }
    return result;
}

mome::ParameterList SequenceModel::parameters() const {
    mome::ParameterList out;
    eeg_embed_.collect("embed.eeg", out);
    emg_embed_.collect("embed.emg", out);
    epoch_stack_.collect("epoch_stack", out);
    out.push_back({"seq_position.eeg", seq_pos_eeg_});
    out.push_back({"seq_position.emg", seq_pos_emg_});
    seq_stack_.collect("seq_stack", out);
    heads_.collect("head", out);
    return out;
}

std::unique_ptr<Model> make_model(const ModelConfig& config, std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x6d6fu};
    std::mt19937_64 rng(seq);
    if (config.kind == ModelKind::Epoch) return std::make_unique<EpochModel>(config, rng);
    return std::make_unique<SequenceModel>(config, rng);
}

}  // namespace sdreamer::models
