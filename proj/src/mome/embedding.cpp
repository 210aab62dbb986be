#include "sdreamer/mome/embedding.hpp"

#include "sdreamer/common/error.hpp"
#include "sdreamer/tensor/ops.hpp"

namespace sdreamer::mome {

namespace ops = sdreamer::tensor;

ModalityEmbedding ModalityEmbedding::init(std::size_t patch_width, std::size_t patch_count, std::size_t dim,
                                          std::mt19937_64& rng) {
    ModalityEmbedding e;
    e.projection = trunc_normal({patch_width, dim}, rng);
    e.cls = trunc_normal({dim}, rng);
    e.position = trunc_normal({patch_count + 1, dim}, rng);
    e.modality = trunc_normal({dim}, rng);
    return e;
}

void ModalityEmbedding::collect(const std::string& prefix, ParameterList& out) const {
    out.push_back({prefix + ".projection", projection});
    out.push_back({prefix + ".cls", cls});
    out.push_back({prefix + ".position", position});
    out.push_back({prefix + ".modality", modality});
}

Tensor embed_patches(const Tensor& patches, const ModalityEmbedding& params, EncodingSwitches switches) {
    if (patches.rank() != 3) {
        throw ShapeError("patches must be [B, P, W], got " + tensor::to_string(patches.shape()));
    }
    const std::size_t b = patches.dim(0);
    const std::size_t p = patches.dim(1);
    const std::size_t w = patches.dim(2);
    const std::size_t d = params.projection.dim(1);
    if (params.projection.dim(0) != w) {
        throw ShapeError("patch width " + std::to_string(w) + " does not match projection rows " +
                         std::to_string(params.projection.dim(0)));
    }
    if (params.position.dim(0) != p + 1) {
        throw ShapeError("positional table has " + std::to_string(params.position.dim(0)) + " rows, need " +
                         std::to_string(p + 1));
    }
    const auto projected = ops::matmul(patches, params.projection);  // [B, P, D]
    const auto cls = ops::broadcast_to(ops::reshape(params.cls, {1, d}), {b, 1, d});
    auto tokens = ops::concat({cls, projected}, 1);
    if (switches.position) {
        tokens = ops::add(tokens, params.position);
    }
    if (switches.modality) {
        tokens = ops::add(tokens, params.modality);
    }
    return tokens;
}

Tensor embed_patches(const signal::PatchedEpoch& epoch, Modality modality, const ModalityEmbedding& params,
                     EncodingSwitches switches) {
    if (!epoch.modalities.has(modality)) {
        throw DataError(std::string(to_string(modality)) + " channel is absent from this epoch");
    }
    const auto values = epoch.modality(modality);
    const Tensor patches({1, epoch.patch_count, epoch.width}, std::vector<double>(values.begin(), values.end()));
    const auto tokens = embed_patches(patches, params, switches);
    return ops::reshape(tokens, {tokens.dim(1), tokens.dim(2)});
}

}  // namespace sdreamer::mome
