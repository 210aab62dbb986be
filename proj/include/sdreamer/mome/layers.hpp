#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "sdreamer/tensor/tensor.hpp"

namespace sdreamer::mome {

using tensor::Tensor;

struct NamedTensor {
    std::string name;
    Tensor value;
};
using ParameterList = std::vector<NamedTensor>;

// Truncated (at two standard deviations) normal initialiser.
Tensor trunc_normal(tensor::Shape shape, std::mt19937_64& rng, double std = 0.02);

// Dropout settings for a forward pass. Inactive unless both a positive rate
// and a generator are supplied.
struct ForwardContext {
    double dropout = 0.0;
    std::mt19937_64* rng = nullptr;

    bool dropout_active() const { return dropout > 0.0 && rng != nullptr; }
};

Tensor apply_dropout(const Tensor& x, const ForwardContext* ctx);

struct Linear {
    Tensor weight;  // [in, out]
    Tensor bias;    // [out]

    static Linear init(std::size_t in, std::size_t out, std::mt19937_64& rng);
    Tensor forward(const Tensor& x) const;
    void collect(const std::string& prefix, ParameterList& out) const;
};

struct LayerNorm {
    Tensor gain;
    Tensor bias;
    double eps = 1e-5;

    static LayerNorm init(std::size_t dim);
    Tensor forward(const Tensor& x) const;
    void collect(const std::string& prefix, ParameterList& out) const;
};

enum class Activation { Gelu, Relu };

struct FeedForward {
    Linear up;    // D -> ffn_dim
    Linear down;  // ffn_dim -> D
    Activation activation = Activation::Gelu;

    static FeedForward init(std::size_t dim, std::size_t hidden, Activation act, std::mt19937_64& rng);
    Tensor forward(const Tensor& x) const;
    void collect(const std::string& prefix, ParameterList& out) const;
};

struct SelfAttention {
    Linear query;
    Linear key;
    Linear value;
    Linear output;
    std::size_t heads = 1;

    static SelfAttention init(std::size_t dim, std::size_t heads, std::mt19937_64& rng);
    void collect(const std::string& prefix, ParameterList& out) const;
};

// Multi-head scaled dot-product self-attention over tokens [B, N, D] (or
// [N, D]) followed by the output projection. The residual is the caller's.
Tensor msa_forward(const Tensor& tokens, const SelfAttention& attention);

}  // namespace sdreamer::mome
