#pragma once

#include <cstddef>
#include <random>

#include "sdreamer/common/modality.hpp"
#include "sdreamer/mome/layers.hpp"
#include "sdreamer/signal/types.hpp"

namespace sdreamer::mome {

// Token embedding for one modality.
struct ModalityEmbedding {
    Tensor projection;  // [W, D], patch -> token
    Tensor cls;         // [D]
    Tensor position;    // [P + 1, D], CLS included
    Tensor modality;    // [D], broadcast over all positions

    static ModalityEmbedding init(std::size_t patch_width, std::size_t patch_count, std::size_t dim,
                                  std::mt19937_64& rng);
    void collect(const std::string& prefix, ParameterList& out) const;
};

// Ablation switches for the joint attribute encoding.
struct EncodingSwitches {
    bool position = true;
    bool modality = true;
};

// patches [B, P, W] -> tokens [B, P + 1, D]:
//   Concat(cls; patches * projection) + position + modality
Tensor embed_patches(const Tensor& patches, const ModalityEmbedding& params, EncodingSwitches switches = {});

// Single-epoch convenience: tokens [P + 1, D] for one modality of `epoch`.
Tensor embed_patches(const signal::PatchedEpoch& epoch, Modality modality, const ModalityEmbedding& params,
                     EncodingSwitches switches = {});

}  // namespace sdreamer::mome
