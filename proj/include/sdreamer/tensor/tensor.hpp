#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sdreamer::tensor {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

// Backing store of a tensor: row-major values plus an optional gradient
// buffer of identical size. Shared between Tensor handles and tape entries.
struct Storage {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until something accumulates into it
    bool requires_grad = false;

    // Gradient buffer, zero-initialised on first use.
    std::span<double> grad_buffer();
};

// Reference-semantics handle to a Storage. Copying a Tensor aliases the
// same values; use clone() for an independent copy.
class Tensor {
public:
    Tensor() = default;
    Tensor(Shape shape, std::vector<double> values);

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double value);
    static Tensor scalar(double value);
    // Leaf that collects gradients.
    static Tensor parameter(Shape shape, std::vector<double> values);

    bool defined() const noexcept { return storage_ != nullptr; }
    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t size() const;
    // Negative axes count from the end.
    std::size_t dim(int axis) const;

    std::span<double> data();
    std::span<const double> data() const;
    double item() const;

    bool requires_grad() const;
    Tensor& set_requires_grad(bool flag);
    bool has_grad() const;
    // Empty span when no gradient has been accumulated.
    std::span<const double> grad() const;
    void zero_grad();

    Tensor detach() const;
    Tensor clone() const;

    bool same_storage(const Tensor& other) const noexcept { return storage_ == other.storage_; }
    const std::shared_ptr<Storage>& storage() const noexcept { return storage_; }
    static Tensor from_storage(std::shared_ptr<Storage> storage);

private:
    std::shared_ptr<Storage> storage_;
};

// Records differentiable operations in execution order (which is a valid
// topological order) and replays their backward rules in reverse.
//
// Operations record onto the tape made current by a TapeScope on the calling
// thread. Without an active tape, or when no input requires a gradient,
// nothing is recorded and the result is a plain value.
class Tape {
public:
    using BackwardRule = std::function<void()>;

    struct Entry {
        std::vector<std::shared_ptr<Storage>> inputs;
        std::shared_ptr<Storage> output;
        BackwardRule backward;
    };

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    void record(std::vector<std::shared_ptr<Storage>> inputs, std::shared_ptr<Storage> output,
                BackwardRule rule);

    // Seeds d(loss)/d(loss) = 1 and propagates to every tensor that requires
    // a gradient. Gradients accumulate into existing buffers.
    void backward(const Tensor& loss);

    std::size_t size() const noexcept { return entries_.size(); }
    const std::vector<Entry>& entries() const noexcept { return entries_; }
    void clear() { entries_.clear(); }

    static Tape* current() noexcept;

private:
    friend class TapeScope;
    std::vector<Entry> entries_;
};

class TapeScope {
public:
    explicit TapeScope(Tape& tape);
    ~TapeScope();
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;

private:
    Tape* previous_;
};

inline void backward(const Tensor& loss, Tape& tape) { tape.backward(loss); }

}  // namespace sdreamer::tensor
