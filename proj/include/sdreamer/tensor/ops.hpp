#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "sdreamer/tensor/tensor.hpp"

// Differentiable operations. Each records a backward rule on the current
// tape (see TapeScope) when any input requires a gradient.
//
// Broadcasting is limited to the "suffix" form: in a binary elementwise op the
// second operand's shape must equal the first's or be a trailing suffix of it
// (a bias [D] against tokens [B, N, D], positions [N, D] against [B, N, D]).
namespace sdreamer::tensor {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

// [..., m, k] x [..., k, n] -> [..., m, n]; leading batch dimensions
// broadcast numpy-style (a rank-2 right operand is shared by every batch).
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor reshape(const Tensor& a, Shape shape);
Tensor permute(const Tensor& a, const std::vector<std::size_t>& order);
Tensor transpose(const Tensor& a, int axis0, int axis1);
// Repeat `a` over leading dimensions so its shape becomes `shape`
// (a.shape must be a suffix of shape).
Tensor broadcast_to(const Tensor& a, const Shape& shape);

Tensor softmax(const Tensor& x, int axis);
Tensor log_softmax(const Tensor& x, int axis);

// Normalises over the last dimension. gain/bias have the last-dimension size.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

Tensor gelu(const Tensor& x);  // tanh approximation
Tensor relu(const Tensor& x);

Tensor concat(const std::vector<Tensor>& parts, int axis);
std::vector<Tensor> split(const Tensor& x, const std::vector<std::size_t>& sizes, int axis);
Tensor narrow(const Tensor& x, int axis, std::size_t start, std::size_t length);

Tensor sum(const Tensor& x);             // -> [1]
Tensor sum(const Tensor& x, int axis);   // reduced axis removed (rank-1 input -> [1])
Tensor mean(const Tensor& x);            // -> [1]

// Inverted dropout with keep-probability 1 - rate. rate == 0 returns x.
Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng);

}  // namespace sdreamer::tensor
