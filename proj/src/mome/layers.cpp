#include "sdreamer/mome/layers.hpp"

#include <cmath>

#include "sdreamer/common/error.hpp"
#include "sdreamer/tensor/ops.hpp"

namespace sdreamer::mome {

namespace ops = sdreamer::tensor;

Tensor trunc_normal(tensor::Shape shape, std::mt19937_64& rng, double std) {
    std::normal_distribution<double> gaussian(0.0, 1.0);
    std::vector<double> values(tensor::numel(shape));
    for (auto& v : values) {
        double z = gaussian(rng);
        while (std::abs(z) > 2.0) z = gaussian(rng);
        v = std * z;
    }
    return Tensor::parameter(std::move(shape), std::move(values));
}

Tensor apply_dropout(const Tensor& x, const ForwardContext* ctx) {
    if (ctx == nullptr || !ctx->dropout_active()) {
        return x;
    }
    return ops::dropout(x, ctx->dropout, *ctx->rng);
}

Linear Linear::init(std::size_t in, std::size_t out, std::mt19937_64& rng) {
    return Linear{trunc_normal({in, out}, rng), Tensor::parameter({out}, std::vector<double>(out, 0.0))};
}

Tensor Linear::forward(const Tensor& x) const { return ops::add(ops::matmul(x, weight), bias); }

void Linear::collect(const std::string& prefix, ParameterList& out) const {
    out.push_back({prefix + ".weight", weight});
    out.push_back({prefix + ".bias", bias});
}

LayerNorm LayerNorm::init(std::size_t dim) {
    return LayerNorm{Tensor::parameter({dim}, std::vector<double>(dim, 1.0)),
                     Tensor::parameter({dim}, std::vector<double>(dim, 0.0))};
}

Tensor LayerNorm::forward(const Tensor& x) const { return ops::layer_norm(x, gain, bias, eps); }

void LayerNorm::collect(const std::string& prefix, ParameterList& out) const {
    out.push_back({prefix + ".gain", gain});
    out.push_back({prefix + ".bias", bias});
}

FeedForward FeedForward::init(std::size_t dim, std::size_t hidden, Activation act, std::mt19937_64& rng) {
    auto up = Linear::init(dim, hidden, rng);
    auto down = Linear::init(hidden, dim, rng);
    return FeedForward{std::move(up), std::move(down), act};
}

Tensor FeedForward::forward(const Tensor& x) const {
    const auto hidden = up.forward(x);
    return down.forward(activation == Activation::Gelu ? ops::gelu(hidden) : ops::relu(hidden));
}

void FeedForward::collect(const std::string& prefix, ParameterList& out) const {
    up.collect(prefix + ".up", out);
    down.collect(prefix + ".down", out);
}

SelfAttention SelfAttention::init(std::size_t dim, std::size_t heads, std::mt19937_64& rng) {
    if (heads == 0 || dim % heads != 0) {
        throw ShapeError("model dimension " + std::to_string(dim) + " is not divisible by " + std::to_string(heads) +
                         " heads");
    }
    SelfAttention a;
    a.query = Linear::init(dim, dim, rng);
    a.key = Linear::init(dim, dim, rng);
    a.value = Linear::init(dim, dim, rng);
    a.output = Linear::init(dim, dim, rng);
    a.heads = heads;
    return a;
}

void SelfAttention::collect(const std::string& prefix, ParameterList& out) const {
    query.collect(prefix + ".query", out);
    key.collect(prefix + ".key", out);
    value.collect(prefix + ".value", out);
    output.collect(prefix + ".output", out);
}

Tensor msa_forward(const Tensor& tokens, const SelfAttention& attention) {
    if (tokens.rank() == 2) {
        const auto batched = ops::reshape(tokens, {1, tokens.dim(0), tokens.dim(1)});
        const auto out = msa_forward(batched, attention);
        return ops::reshape(out, tokens.shape());
    }
    if (tokens.rank() != 3) {
        throw ShapeError("attention expects [B, N, D] tokens, got " + tensor::to_string(tokens.shape()));
    }
    const std::size_t b = tokens.dim(0);
    const std::size_t n = tokens.dim(1);
    const std::size_t d = tokens.dim(2);
    const std::size_t h = attention.heads;
    if (h == 0 || d % h != 0) {
        throw ShapeError("model dimension " + std::to_string(d) + " is not divisible by " + std::to_string(h) +
                         " heads");
    }
    const std::size_t dh = d / h;

    const auto heads_of = [&](const Linear& proj, std::vector<std::size_t> order) {
        return ops::permute(ops::reshape(proj.forward(tokens), {b, n, h, dh}), order);
    };
    const auto q = heads_of(attention.query, {0, 2, 1, 3});       // [B, h, N, dh]
    const auto k_t = heads_of(attention.key, {0, 2, 3, 1});       // [B, h, dh, N]
    const auto v = heads_of(attention.value, {0, 2, 1, 3});       // [B, h, N, dh]
    const auto scores = ops::scale(ops::matmul(q, k_t), 1.0 / std::sqrt(static_cast<double>(dh)));
    const auto weights = ops::softmax(scores, -1);
    const auto mixed = ops::matmul(weights, v);                    // [B, h, N, dh]
    const auto merged = ops::reshape(ops::permute(mixed, {0, 2, 1, 3}), {b, n, d});
    return attention.output.forward(merged);
}

}  // namespace sdreamer::mome
