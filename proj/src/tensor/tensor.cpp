#include "sdreamer/tensor/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sdreamer/common/error.hpp"

namespace sdreamer::tensor {

std::size_t numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        out << (i ? "x" : "") << shape[i];
    }
    out << ']';
    return out.str();
}

std::span<double> Storage::grad_buffer() {
    if (grad.empty()) {
        grad.assign(data.size(), 0.0);
    }
    return grad;
}

Tensor::Tensor(Shape shape, std::vector<double> values) : storage_(std::make_shared<Storage>()) {
    for (const auto d : shape) {
        if (d == 0) {
            throw ShapeError("tensor dimensions must be positive, got " + to_string(shape));
        }
    }
    if (numel(shape) != values.size()) {
        throw ShapeError("tensor of shape " + to_string(shape) + " needs " + std::to_string(numel(shape)) +
                         " values, got " + std::to_string(values.size()));
    }
    storage_->shape = std::move(shape);
    storage_->data = std::move(values);
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
    const auto n = numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
    Tensor t(std::move(shape), std::move(values));
    t.storage_->requires_grad = true;
    return t;
}

Tensor Tensor::from_storage(std::shared_ptr<Storage> storage) {
    Tensor t;
    t.storage_ = std::move(storage);
    return t;
}

const Shape& Tensor::shape() const { return storage_->shape; }

std::size_t Tensor::size() const { return storage_->data.size(); }

std::size_t Tensor::dim(int axis) const {
    const auto r = static_cast<int>(rank());
    const int a = axis < 0 ? axis + r : axis;
    if (a < 0 || a >= r) {
        throw ShapeError("axis " + std::to_string(axis) + " out of range for " + to_string(shape()));
    }
    return shape()[static_cast<std::size_t>(a)];
}

std::span<double> Tensor::data() { return storage_->data; }

std::span<const double> Tensor::data() const { return storage_->data; }

double Tensor::item() const {
    if (size() != 1) {
        throw ShapeError("item() on non-scalar tensor " + to_string(shape()));
    }
    return storage_->data[0];
}

bool Tensor::requires_grad() const { return storage_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool flag) {
    storage_->requires_grad = flag;
    return *this;
}

bool Tensor::has_grad() const { return !storage_->grad.empty(); }

std::span<const double> Tensor::grad() const { return storage_->grad; }

void Tensor::zero_grad() { storage_->grad.clear(); }

Tensor Tensor::detach() const { return Tensor(storage_->shape, storage_->data); }

Tensor Tensor::clone() const {
    Tensor t(storage_->shape, storage_->data);
    t.storage_->requires_grad = storage_->requires_grad;
    return t;
}

namespace {
thread_local Tape* active_tape = nullptr;
}

Tape* Tape::current() noexcept { return active_tape; }

TapeScope::TapeScope(Tape& tape) : previous_(active_tape) { active_tape = &tape; }

TapeScope::~TapeScope() { active_tape = previous_; }

void Tape::record(std::vector<std::shared_ptr<Storage>> inputs, std::shared_ptr<Storage> output,
                  BackwardRule rule) {
    entries_.push_back(Entry{std::move(inputs), std::move(output), std::move(rule)});
}

void Tape::backward(const Tensor& loss) {
    if (!loss.defined() || loss.size() != 1) {
        throw ShapeError("backward() needs a scalar loss");
    }
    auto seed = loss.storage()->grad_buffer();
    seed[0] += 1.0;
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
        if (it->output->grad.empty()) {
            continue;  // not reachable from the loss
        }
        it->backward();
    }
}

}  // namespace sdreamer::tensor
