#include "sdreamer/tensor/ops.hpp"

// Small products would otherwise take Eigen's coefficient-based path, whose
// vectorised inner products start at an alignment-dependent element. Packed
// GEMM sums in a fixed order, so results stay bit-identical across runs.
#define EIGEN_GEMM_TO_COEFFBASED_THRESHOLD 1
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "sdreamer/common/error.hpp"

namespace sdreamer::tensor {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using ArrayMap = Eigen::Map<Eigen::ArrayXd>;
using ConstArrayMap = Eigen::Map<const Eigen::ArrayXd>;

// Wraps `out` as the result of an op over `inputs`. When a tape is active and
// some input requires a gradient, `rule(out_storage)` is recorded as the
// backward step.
template <typename Rule>
Tensor finish(Tensor out, std::initializer_list<const Tensor*> inputs, Rule rule) {
    Tape* tape = Tape::current();
    if (tape == nullptr) {
        return out;
    }
    bool any = false;
    std::vector<std::shared_ptr<Storage>> sources;
    sources.reserve(inputs.size());
    for (const auto* t : inputs) {
        any = any || t->requires_grad();
        sources.push_back(t->storage());
    }
    if (!any) {
        return out;
    }
    out.set_requires_grad(true);
    auto storage = out.storage();
    tape->record(std::move(sources), storage, [storage, rule = std::move(rule)]() { rule(*storage); });
    return out;
}

template <typename Rule>
Tensor finish_many(Tensor out, const std::vector<Tensor>& inputs, Rule rule) {
    Tape* tape = Tape::current();
    if (tape == nullptr) {
        return out;
    }
    bool any = false;
    std::vector<std::shared_ptr<Storage>> sources;
    sources.reserve(inputs.size());
    for (const auto& t : inputs) {
        any = any || t.requires_grad();
        sources.push_back(t.storage());
    }
    if (!any) {
        return out;
    }
    out.set_requires_grad(true);
    auto storage = out.storage();
    tape->record(std::move(sources), storage, [storage, rule = std::move(rule)]() { rule(*storage); });
    return out;
}

std::size_t normalize_axis(int axis, std::size_t rank) {
    const int r = static_cast<int>(rank);
    const int a = axis < 0 ? axis + r : axis;
    if (a < 0 || a >= r) {
        throw ShapeError("axis " + std::to_string(axis) + " out of range for rank " + std::to_string(rank));
    }
    return static_cast<std::size_t>(a);
}

bool is_suffix(const Shape& big, const Shape& small) {
    if (small.size() > big.size()) {
        return false;
    }
    return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

// Splits a shape around `axis` into (outer, length, inner) extents.
struct AxisView {
    std::size_t outer = 1;
    std::size_t length = 1;
    std::size_t inner = 1;
};

AxisView axis_view(const Shape& shape, std::size_t axis) {
    AxisView v;
    for (std::size_t i = 0; i < axis; ++i) {
        v.outer *= shape[i];
    }
    v.length = shape[axis];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) {
        v.inner *= shape[i];
    }
    return v;
}

void require_finite(std::span<const double> values, const char* op) {
    for (const double v : values) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string(op) + ": non-finite input");
        }
    }
}

enum class Binary { Add, Sub, Mul };

Tensor binary(const Tensor& a_in, const Tensor& b_in, Binary kind) {
    const Tensor* a = &a_in;
    const Tensor* b = &b_in;
    if (!is_suffix(a->shape(), b->shape())) {
        if (kind != Binary::Sub && is_suffix(b->shape(), a->shape())) {
            std::swap(a, b);
        } else {
            throw ShapeError("cannot broadcast " + to_string(b_in.shape()) + " onto " + to_string(a_in.shape()));
        }
    }
    const auto av = a->data();
    const auto bv = b->data();
    const std::size_t n = av.size();
    const auto nb = static_cast<Eigen::Index>(bv.size());
    std::vector<double> out(n);
    const ConstArrayMap y(bv.data(), nb);
    for (std::size_t off = 0; off < n; off += bv.size()) {
        const ConstArrayMap x(av.data() + off, nb);
        ArrayMap z(out.data() + off, nb);
        if (kind == Binary::Add) {
            z = x + y;
        } else if (kind == Binary::Sub) {
            z = x - y;
        } else {
            z = x * y;
        }
    }
    auto sa = a->storage();
    auto sb = b->storage();
    return finish(Tensor(a->shape(), std::move(out)), {a, b}, [sa, sb, kind](const Storage& o) {
        const auto nb = static_cast<Eigen::Index>(sb->data.size());
        const std::size_t n = o.grad.size();
        const ConstArrayMap bv(sb->data.data(), nb);
        if (sa->requires_grad) {
            auto ga = sa->grad_buffer();
            for (std::size_t off = 0; off < n; off += sb->data.size()) {
                const ConstArrayMap g(o.grad.data() + off, nb);
                if (kind == Binary::Mul) {
                    ArrayMap(ga.data() + off, nb) += g * bv;
                } else {
                    ArrayMap(ga.data() + off, nb) += g;
                }
            }
        }
        if (sb->requires_grad) {
            ArrayMap gb(sb->grad_buffer().data(), nb);
            const double sign = kind == Binary::Sub ? -1.0 : 1.0;
            for (std::size_t off = 0; off < n; off += sb->data.size()) {
                const ConstArrayMap g(o.grad.data() + off, nb);
                if (kind == Binary::Mul) {
                    gb += g * ConstArrayMap(sa->data.data() + off, nb);
                } else {
                    gb += sign * g;
                }
            }
        }
    });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, Binary::Add); }

Tensor sub(const Tensor& a, const Tensor& b) { return binary(a, b, Binary::Sub); }

Tensor mul(const Tensor& a, const Tensor& b) { return binary(a, b, Binary::Mul); }

Tensor scale(const Tensor& a, double factor) {
    std::vector<double> out(a.data().begin(), a.data().end());
    for (auto& v : out) v *= factor;
    auto sa = a.storage();
    return finish(Tensor(a.shape(), std::move(out)), {&a}, [sa, factor](const Storage& o) {
        auto ga = sa->grad_buffer();
        for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += factor * o.grad[i];
    });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() < 2 || b.rank() < 2) {
        throw ShapeError("matmul needs rank >= 2 operands, got " + to_string(a.shape()) + " and " +
                         to_string(b.shape()));
    }
    const std::size_t m = a.dim(-2);
    const std::size_t k = a.dim(-1);
    const std::size_t n = b.dim(-1);
    if (b.dim(-2) != k) {
        throw ShapeError("matmul inner dimensions disagree: " + to_string(a.shape()) + " x " + to_string(b.shape()));
    }

    auto sa = a.storage();
    auto sb = b.storage();

    if (b.rank() == 2) {
        // Shared right operand: one GEMM over all rows of a.
        const std::size_t rows = a.size() / k;
        Shape shape = a.shape();
        shape.back() = n;
        std::vector<double> out(rows * n);
        MatrixMap(out.data(), rows, n).noalias() =
            ConstMatrixMap(a.data().data(), rows, k) * ConstMatrixMap(b.data().data(), k, n);
        return finish(Tensor(std::move(shape), std::move(out)), {&a, &b}, [sa, sb, rows, k, n](const Storage& o) {
            const ConstMatrixMap g(o.grad.data(), rows, n);
            if (sa->requires_grad) {
                MatrixMap(sa->grad_buffer().data(), rows, k).noalias() +=
                    g * ConstMatrixMap(sb->data.data(), k, n).transpose();
            }
            if (sb->requires_grad) {
                MatrixMap(sb->grad_buffer().data(), k, n).noalias() +=
                    ConstMatrixMap(sa->data.data(), rows, k).transpose() * g;
            }
        });
    }

    // General case: broadcast leading batch dimensions.
    const Shape a_batch(a.shape().begin(), a.shape().end() - 2);
    const Shape b_batch(b.shape().begin(), b.shape().end() - 2);
    const std::size_t rank = std::max(a_batch.size(), b_batch.size());
    Shape batch(rank, 1);
    std::vector<std::size_t> a_dims(rank, 1);
    std::vector<std::size_t> b_dims(rank, 1);
    std::copy(a_batch.begin(), a_batch.end(), a_dims.begin() + static_cast<long>(rank - a_batch.size()));
    std::copy(b_batch.begin(), b_batch.end(), b_dims.begin() + static_cast<long>(rank - b_batch.size()));
    for (std::size_t i = 0; i < rank; ++i) {
        if (a_dims[i] != b_dims[i] && a_dims[i] != 1 && b_dims[i] != 1) {
            throw ShapeError("matmul batch dimensions not broadcastable: " + to_string(a.shape()) + " x " +
                             to_string(b.shape()));
        }
        batch[i] = std::max(a_dims[i], b_dims[i]);
    }
    const std::size_t count = numel(batch);
    std::vector<std::size_t> a_offsets(count);
    std::vector<std::size_t> b_offsets(count);
    for (std::size_t flat = 0; flat < count; ++flat) {
        std::size_t rem = flat;
        std::size_t ai = 0, bi = 0, a_stride = 1, b_stride = 1;
        for (std::size_t d = rank; d-- > 0;) {
            const std::size_t idx = rem % batch[d];
            rem /= batch[d];
            ai += (a_dims[d] == 1 ? 0 : idx) * a_stride;
            bi += (b_dims[d] == 1 ? 0 : idx) * b_stride;
            a_stride *= a_dims[d];
            b_stride *= b_dims[d];
        }
        a_offsets[flat] = ai * m * k;
        b_offsets[flat] = bi * k * n;
    }

    Shape shape = batch;
    shape.push_back(m);
    shape.push_back(n);
    std::vector<double> out(count * m * n);
    for (std::size_t i = 0; i < count; ++i) {
        MatrixMap(out.data() + i * m * n, m, n).noalias() =
            ConstMatrixMap(a.data().data() + a_offsets[i], m, k) * ConstMatrixMap(b.data().data() + b_offsets[i], k, n);
    }
    return finish(Tensor(std::move(shape), std::move(out)), {&a, &b},
                  [sa, sb, m, k, n, a_offsets = std::move(a_offsets), b_offsets = std::move(b_offsets)](const Storage& o) {
                      const std::size_t batches = a_offsets.size();
                      if (sa->requires_grad) {
                          auto ga = sa->grad_buffer();
                          for (std::size_t i = 0; i < batches; ++i) {
                              MatrixMap(ga.data() + a_offsets[i], m, k).noalias() +=
                                  ConstMatrixMap(o.grad.data() + i * m * n, m, n) *
                                  ConstMatrixMap(sb->data.data() + b_offsets[i], k, n).transpose();
                          }
                      }
                      if (sb->requires_grad) {
                          auto gb = sb->grad_buffer();
                          for (std::size_t i = 0; i < batches; ++i) {
                              MatrixMap(gb.data() + b_offsets[i], k, n).noalias() +=
                                  ConstMatrixMap(sa->data.data() + a_offsets[i], m, k).transpose() *
                                  ConstMatrixMap(o.grad.data() + i * m * n, m, n);
                          }
                      }
                  });
}

Tensor reshape(const Tensor& a, Shape shape) {
    if (numel(shape) != a.size()) {
        throw ShapeError("cannot reshape " + to_string(a.shape()) + " to " + to_string(shape));
    }
    auto sa = a.storage();
    return finish(Tensor(std::move(shape), sa->data), {&a}, [sa](const Storage& o) {
        auto ga = sa->grad_buffer();
        for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += o.grad[i];
    });
}

Tensor permute(const Tensor& a, const std::vector<std::size_t>& order) {
    const std::size_t rank = a.rank();
    if (order.size() != rank) {
        throw ShapeError("permute order has wrong length for " + to_string(a.shape()));
    }
    std::vector<bool> seen(rank, false);
    for (const auto d : order) {
        if (d >= rank || seen[d]) {
            throw ShapeError("permute order is not a permutation");
        }
        seen[d] = true;
    }
    std::vector<std::size_t> in_strides(rank, 1);
    for (std::size_t d = rank; d-- > 1;) {
        in_strides[d - 1] = in_strides[d] * a.shape()[d];
    }
    Shape shape(rank);
    std::vector<std::size_t> strides(rank);  // input stride for each output axis
    for (std::size_t d = 0; d < rank; ++d) {
        shape[d] = a.shape()[order[d]];
        strides[d] = in_strides[order[d]];
    }
    // Precomputed gather index, shared by forward and backward.
    auto index = std::make_shared<std::vector<std::size_t>>(a.size());
    {
        std::vector<std::size_t> counter(rank, 0);
        std::size_t src = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            (*index)[i] = src;
            for (std::size_t d = rank; d-- > 0;) {
                ++counter[d];
                src += strides[d];
                if (counter[d] < shape[d]) {
                    break;
                }
                src -= strides[d] * shape[d];
                counter[d] = 0;
            }
        }
    }
    std::vector<double> out(a.size());
    const auto av = a.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[(*index)[i]];
    auto sa = a.storage();
    return finish(Tensor(std::move(shape), std::move(out)), {&a}, [sa, index](const Storage& o) {
        auto ga = sa->grad_buffer();
        for (std::size_t i = 0; i < o.grad.size(); ++i) ga[(*index)[i]] += o.grad[i];
    });
}

Tensor transpose(const Tensor& a, int axis0, int axis1) {
    std::vector<std::size_t> order(a.rank());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::swap(order[normalize_axis(axis0, a.rank())], order[normalize_axis(axis1, a.rank())]);
    return permute(a, order);
}

Tensor broadcast_to(const Tensor& a, const Shape& shape) {
    if (!is_suffix(shape, a.shape())) {
        throw ShapeError("cannot broadcast " + to_string(a.shape()) + " to " + to_string(shape));
    }
    const std::size_t n = numel(shape);
    const auto av = a.data();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = av[i % av.size()];
    auto sa = a.storage();
    return finish(Tensor(shape, std::move(out)), {&a}, [sa](const Storage& o) {
        auto ga = sa->grad_buffer();
        for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i % ga.size()] += o.grad[i];
    });
}

Tensor softmax(const Tensor& x, int axis) {
    require_finite(x.data(), "softmax");
    const auto v = axis_view(x.shape(), normalize_axis(axis, x.rank()));
    const auto xv = x.data();
    std::vector<double> out(x.size());
    if (v.inner == 1) {
        // Contiguous rows: vectorised exp.
        const auto len = static_cast<Eigen::Index>(v.length);
        Eigen::ArrayXd scratch(len);
        for (std::size_t o = 0; o < v.outer; ++o) {
            const ConstArrayMap row(xv.data() + o * v.length, len);
            // exp goes through an aligned buffer: see gelu.
            scratch = (row - row.maxCoeff()).exp();
            const double total = std::accumulate(scratch.begin(), scratch.end(), 0.0);
            ArrayMap(out.data() + o * v.length, len) = scratch / total;
        }
    } else {
        for (std::size_t o = 0; o < v.outer; ++o) {
            for (std::size_t in = 0; in < v.inner; ++in) {
                const std::size_t base = o * v.length * v.inner + in;
                double peak = xv[base];
                for (std::size_t j = 1; j < v.length; ++j) peak = std::max(peak, xv[base + j * v.inner]);
                double total = 0.0;
                for (std::size_t j = 0; j < v.length; ++j) {
                    const double e = std::exp(xv[base + j * v.inner] - peak);
                    out[base + j * v.inner] = e;
                    total += e;
                }
                for (std::size_t j = 0; j < v.length; ++j) out[base + j * v.inner] /= total;
            }
        }
    }
    auto sx = x.storage();
    return finish(Tensor(x.shape(), std::move(out)), {&x}, [sx, v](const Storage& o) {
        auto gx = sx->grad_buffer();
        const auto& y = o.data;
        const auto& g = o.grad;
        for (std::size_t oo = 0; oo < v.outer; ++oo) {
            for (std::size_t in = 0; in < v.inner; ++in) {
                const std::size_t base = oo * v.length * v.inner + in;
                double dot = 0.0;
                for (std::size_t j = 0; j < v.length; ++j) dot += g[base + j * v.inner] * y[base + j * v.inner];
                for (std::size_t j = 0; j < v.length; ++j) {
                    const std::size_t idx = base + j * v.inner;
                    gx[idx] += y[idx] * (g[idx] - dot);
                }
            }
        }
    });
}

Tensor log_softmax(const Tensor& x, int axis) {
    require_finite(x.data(), "log_softmax");
    const auto v = axis_view(x.shape(), normalize_axis(axis, x.rank()));
    const auto xv = x.data();
    std::vector<double> out(x.size());
    for (std::size_t o = 0; o < v.outer; ++o) {
        for (std::size_t in = 0; in < v.inner; ++in) {
            const std::size_t base = o * v.length * v.inner + in;
            double peak = xv[base];
            for (std::size_t j = 1; j < v.length; ++j) peak = std::max(peak, xv[base + j * v.inner]);
            double total = 0.0;
            for (std::size_t j = 0; j < v.length; ++j) total += std::exp(xv[base + j * v.inner] - peak);
            const double log_total = peak + std::log(total);
            for (std::size_t j = 0; j < v.length; ++j) out[base + j * v.inner] = xv[base + j * v.inner] - log_total;
        }
    }
    auto sx = x.storage();
    return finish(Tensor(x.shape(), std::move(out)), {&x}, [sx, v](const Storage& o) {
        auto gx = sx->grad_buffer();
        const auto& y = o.data;
        const auto& g = o.grad;
        for (std::size_t oo = 0; oo < v.outer; ++oo) {
            for (std::size_t in = 0; in < v.inner; ++in) {
                const std::size_t base = oo * v.length * v.inner + in;
                double total = 0.0;
                for (std::size_t j = 0; j < v.length; ++j) total += g[base + j * v.inner];
                for (std::size_t j = 0; j < v.length; ++j) {
                    const std::size_t idx = base + j * v.inner;
                    gx[idx] += g[idx] - std::exp(y[idx]) * total;
                }
            }
        }
    });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    const std::size_t d = x.dim(-1);
    if (gain.size() != d || bias.size() != d) {
        throw ShapeError("layer_norm affine parameters must have size " + std::to_string(d));
    }
    const std::size_t rows = x.size() / d;
    const auto xv = x.data();
    const auto gv = gain.data();
    const auto bv = bias.data();
    auto normalized = std::make_shared<std::vector<double>>(x.size());
    auto inv_std = std::make_shared<std::vector<double>>(rows);
    std::vector<double> out(x.size());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = xv.data() + r * d;
        double mu = 0.0;
        for (std::size_t j = 0; j < d; ++j) mu += row[j];
        mu /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
        var /= static_cast<double>(d);
        const double rs = 1.0 / std::sqrt(var + eps);
        (*inv_std)[r] = rs;
        for (std::size_t j = 0; j < d; ++j) {
            const double h = (row[j] - mu) * rs;
            (*normalized)[r * d + j] = h;
            out[r * d + j] = h * gv[j] + bv[j];
        }
    }
    auto sx = x.storage();
    auto sg = gain.storage();
    auto sb = bias.storage();
    return finish(Tensor(x.shape(), std::move(out)), {&x, &gain, &bias},
                  [sx, sg, sb, normalized, inv_std, rows, d](const Storage& o) {
                      const auto& g = o.grad;
                      const auto& h = *normalized;
                      if (sg->requires_grad || sb->requires_grad) {
                          auto gg = sg->requires_grad ? sg->grad_buffer() : std::span<double>();
                          auto gb = sb->requires_grad ? sb->grad_buffer() : std::span<double>();
                          for (std::size_t r = 0; r < rows; ++r) {
                              for (std::size_t j = 0; j < d; ++j) {
                                  if (!gg.empty()) gg[j] += g[r * d + j] * h[r * d + j];
                                  if (!gb.empty()) gb[j] += g[r * d + j];
                              }
                          }
                      }
                      if (sx->requires_grad) {
                          auto gx = sx->grad_buffer();
                          const auto& gain_v = sg->data;
                          const double inv_d = 1.0 / static_cast<double>(d);
                          for (std::size_t r = 0; r < rows; ++r) {
                              double mean_dh = 0.0;
                              double mean_dh_h = 0.0;
                              for (std::size_t j = 0; j < d; ++j) {
                                  const double dh = g[r * d + j] * gain_v[j];
                                  mean_dh += dh;
                                  mean_dh_h += dh * h[r * d + j];
                              }
                              mean_dh *= inv_d;
                              mean_dh_h *= inv_d;
                              const double rs = (*inv_std)[r];
                              for (std::size_t j = 0; j < d; ++j) {
                                  const double dh = g[r * d + j] * gain_v[j];
                                  gx[r * d + j] += rs * (dh - mean_dh - h[r * d + j] * mean_dh_h);
                              }
                          }
                      }
                  });
}

namespace {

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluK = 0.044715;

// tanh(c (v + k v^3)) through exp, which Eigen vectorises for doubles.
Eigen::ArrayXd gelu_tanh(const ConstArrayMap& v) {
    const Eigen::ArrayXd u = kGeluC * (v + kGeluK * v.cube());
    return 1.0 - 2.0 / ((2.0 * u).exp() + 1.0);
}

}  // namespace

Tensor gelu(const Tensor& x) {
    const ConstArrayMap v(x.data().data(), static_cast<Eigen::Index>(x.size()));
    std::vector<double> out(x.size());
    // Eigen evaluates the unaligned head of a mapped destination with scalar
    // std::exp and the rest with its packet exp; the two differ in the last
    // bit, so the split must not depend on where malloc put the buffer.
    // Aligned temporaries make it a function of the length alone.
    const Eigen::ArrayXd t = gelu_tanh(v);
    ArrayMap(out.data(), v.size()) = 0.5 * v * (1.0 + t);
    auto sx = x.storage();
    return finish(Tensor(x.shape(), std::move(out)), {&x}, [sx](const Storage& o) {
        const auto n = static_cast<Eigen::Index>(o.grad.size());
        const ConstArrayMap v(sx->data.data(), n);
        const Eigen::ArrayXd t = gelu_tanh(v);
        const Eigen::ArrayXd slope = 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t.square()) * kGeluC * (1.0 + 3.0 * kGeluK * v.square());
        ArrayMap(sx->grad_buffer().data(), n) += ConstArrayMap(o.grad.data(), n) * slope;
    });
}

Tensor relu(const Tensor& x) {
    const auto xv = x.data();
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
    auto sx = x.storage();
    return finish(Tensor(x.shape(), std::move(out)), {&x}, [sx](const Storage& o) {
        auto gx = sx->grad_buffer();
        for (std::size_t i = 0; i < o.grad.size(); ++i) {
            if (sx->data[i] > 0.0) gx[i] += o.grad[i];
        }
    });
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
    if (parts.empty()) {
        throw ShapeError("concat of zero tensors");
    }
    const std::size_t rank = parts.front().rank();
    const std::size_t ax = normalize_axis(axis, rank);
    Shape shape = parts.front().shape();
    shape[ax] = 0;
    for (const auto& p : parts) {
        if (p.rank() != rank) {
            throw ShapeError("concat rank mismatch");
        }
        for (std::size_t d = 0; d < rank; ++d) {
            if (d != ax && p.shape()[d] != parts.front().shape()[d]) {
                throw ShapeError("concat shape mismatch: " + to_string(p.shape()) + " vs " +
                                 to_string(parts.front().shape()));
            }
        }
        shape[ax] += p.shape()[ax];
    }
    const auto v = axis_view(shape, ax);
    std::vector<std::size_t> widths;  // contiguous run per outer index
    for (const auto& p : parts) widths.push_back(p.shape()[ax] * v.inner);
    const std::size_t row = v.length * v.inner;
    std::vector<double> out(numel(shape));
    for (std::size_t o = 0; o < v.outer; ++o) {
        std::size_t at = o * row;
        for (std::size_t p = 0; p < parts.size(); ++p) {
            const auto src = parts[p].data().subspan(o * widths[p], widths[p]);
            std::copy(src.begin(), src.end(), out.begin() + static_cast<long>(at));
            at += widths[p];
        }
    }
    std::vector<std::shared_ptr<Storage>> sources;
    for (const auto& p : parts) sources.push_back(p.storage());
    return finish_many(Tensor(std::move(shape), std::move(out)), parts,
                       [sources, widths, row, outer = v.outer](const Storage& o) {
                           std::size_t offset = 0;
                           for (std::size_t p = 0; p < sources.size(); ++p) {
                               if (sources[p]->requires_grad) {
                                   auto gp = sources[p]->grad_buffer();
                                   for (std::size_t oo = 0; oo < outer; ++oo) {
                                       const double* src = o.grad.data() + oo * row + offset;
                                       double* dst = gp.data() + oo * widths[p];
                                       for (std::size_t j = 0; j < widths[p]; ++j) dst[j] += src[j];
                                   }
                               }
                               offset += widths[p];
                           }
                       });
}

Tensor narrow(const Tensor& x, int axis, std::size_t start, std::size_t length) {
    const std::size_t ax = normalize_axis(axis, x.rank());
    if (length == 0 || start + length > x.shape()[ax]) {
        throw ShapeError("narrow [" + std::to_string(start) + ", +" + std::to_string(length) + ") out of range for " +
                         to_string(x.shape()));
    }
    const auto v = axis_view(x.shape(), ax);
    Shape shape = x.shape();
    shape[ax] = length;
    const std::size_t width = length * v.inner;
    const std::size_t row = v.length * v.inner;
    const std::size_t offset = start * v.inner;
    std::vector<double> out(v.outer * width);
    const auto xv = x.data();
    for (std::size_t o = 0; o < v.outer; ++o) {
        std::copy_n(xv.begin() + static_cast<long>(o * row + offset), width, out.begin() + static_cast<long>(o * width));
    }
    auto sx = x.storage();
    return finish(Tensor(std::move(shape), std::move(out)), {&x}, [sx, v, width, row, offset](const Storage& o) {
        auto gx = sx->grad_buffer();
        for (std::size_t oo = 0; oo < v.outer; ++oo) {
            for (std::size_t j = 0; j < width; ++j) gx[oo * row + offset + j] += o.grad[oo * width + j];
        }
    });
}

std::vector<Tensor> split(const Tensor& x, const std::vector<std::size_t>& sizes, int axis) {
    const std::size_t ax = normalize_axis(axis, x.rank());
    std::size_t total = 0;
    for (const auto s : sizes) total += s;
    if (total != x.shape()[ax]) {
        throw ShapeError("split sizes sum to " + std::to_string(total) + " but axis has length " +
                         std::to_string(x.shape()[ax]));
    }
    std::vector<Tensor> parts;
    std::size_t start = 0;
    for (const auto s : sizes) {
        parts.push_back(narrow(x, static_cast<int>(ax), start, s));
        start += s;
    }
    return parts;
}

Tensor sum(const Tensor& x) {
    double total = 0.0;
    for (const double v : x.data()) total += v;
    auto sx = x.storage();
    return finish(Tensor::scalar(total), {&x}, [sx](const Storage& o) {
        auto gx = sx->grad_buffer();
        for (auto& g : gx) g += o.grad[0];
    });
}

Tensor sum(const Tensor& x, int axis) {
    const std::size_t ax = normalize_axis(axis, x.rank());
    const auto v = axis_view(x.shape(), ax);
    Shape shape;
    for (std::size_t d = 0; d < x.rank(); ++d) {
        if (d != ax) shape.push_back(x.shape()[d]);
    }
    if (shape.empty()) shape.push_back(1);
    std::vector<double> out(v.outer * v.inner, 0.0);
    const auto xv = x.data();
    for (std::size_t o = 0; o < v.outer; ++o) {
        for (std::size_t j = 0; j < v.length; ++j) {
            for (std::size_t in = 0; in < v.inner; ++in) {
                out[o * v.inner + in] += xv[(o * v.length + j) * v.inner + in];
            }
        }
    }
    auto sx = x.storage();
    return finish(Tensor(std::move(shape), std::move(out)), {&x}, [sx, v](const Storage& o) {
        auto gx = sx->grad_buffer();
        for (std::size_t oo = 0; oo < v.outer; ++oo) {
            for (std::size_t j = 0; j < v.length; ++j) {
                for (std::size_t in = 0; in < v.inner; ++in) {
                    gx[(oo * v.length + j) * v.inner + in] += o.grad[oo * v.inner + in];
                }
            }
        }
    });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng) {
    if (rate <= 0.0) {
        return x;
    }
    if (rate >= 1.0) {
        throw ShapeError("dropout rate must be < 1");
    }
    std::bernoulli_distribution keep(1.0 - rate);
    std::vector<double> mask(x.size());
    for (auto& m : mask) m = keep(rng) ? 1.0 / (1.0 - rate) : 0.0;
    return mul(x, Tensor(x.shape(), std::move(mask)));
}

}  // namespace sdreamer::tensor
