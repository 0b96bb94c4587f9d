#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include "tdmi/errors.hpp"

namespace tdmi {

using Shape = std::vector<int>;

std::int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

template <typename T>
struct TensorImpl {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad; // empty until backward touches this tensor
    bool requires_grad = false;

    void ensure_grad() {
        if (grad.empty()) grad.assign(value.size(), T(0));
    }
};

// Value-semantic handle to a shared tensor buffer. Copying a Tensor aliases
// the underlying storage; clone() deep-copies.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape shape, T fill = T(0), bool requires_grad = false)
        : impl_(std::make_shared<TensorImpl<T>>()) {
        impl_->shape = std::move(shape);
        impl_->value.assign(static_cast<std::size_t>(shape_numel(impl_->shape)), fill);
        impl_->requires_grad = requires_grad;
    }

    Tensor(Shape shape, std::vector<T> data, bool requires_grad = false)
        : impl_(std::make_shared<TensorImpl<T>>()) {
        if (shape_numel(shape) != static_cast<std::int64_t>(data.size()))
            throw ShapeError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
        impl_->shape = std::move(shape);
        impl_->value = std::move(data);
        impl_->requires_grad = requires_grad;
    }

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    int rank() const { return static_cast<int>(impl_->shape.size()); }
    int dim(int i) const { return impl_->shape[static_cast<std::size_t>(i)]; }
    std::int64_t size() const { return static_cast<std::int64_t>(impl_->value.size()); }

    std::vector<T>& values() { return impl_->value; }
    const std::vector<T>& values() const { return impl_->value; }
    T* data() { return impl_->value.data(); }
    const T* data() const { return impl_->value.data(); }

    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool rg) { impl_->requires_grad = rg; }

    bool has_grad() const { return !impl_->grad.empty(); }
    std::vector<T>& grad() {
        impl_->ensure_grad();
        return impl_->grad;
    }
    const std::vector<T>& grad() const {
        impl_->ensure_grad();
        return impl_->grad;
    }
    void zero_grad() {
        if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), T(0));
    }

    // Scalar access (rank-agnostic, requires numel == 1).
    T item() const {
        if (size() != 1) throw ContractError("item() on non-scalar tensor of shape " + shape_str(shape()));
        return impl_->value[0];
    }

    Tensor clone() const {
        Tensor t;
        t.impl_ = std::make_shared<TensorImpl<T>>(*impl_);
        return t;
    }

    // Value copy that does not participate in differentiation.
    Tensor detached() const {
        Tensor t(impl_->shape, impl_->value, false);
        return t;
    }

    std::shared_ptr<TensorImpl<T>> ptr() const { return impl_; }
    TensorImpl<T>* impl() const { return impl_.get(); }

private:
    std::shared_ptr<TensorImpl<T>> impl_;
};

template <typename T>
Tensor<T> scalar_tensor(T v) {
    return Tensor<T>(Shape{1}, std::vector<T>{v});
}

bool checked_mode();
void set_checked_mode(bool on);

// Returns true when the named fault is injected via the TDMI_FAULT
// environment variable. Used by the verification battery's mutation test.
bool fault_injected(const char* key);

// Define-by-run tape. Records one entry per executed primitive in forward
// order; backward() replays the entries in reverse, which visits each node
// exactly once and accumulates (sums) gradients at shared subexpressions.
// A tape is rebuilt for every forward pass.
template <typename T>
class Tape {
public:
    Tape() = default;
    explicit Tape(bool recording) : recording_(recording) {}

    bool recording() const { return recording_; }
    void set_recording(bool r) { recording_ = r; }

    // Called by every primitive after computing `out`. Performs the checked-
    // mode finiteness scan and stores the backward closure when needed.
    void record(const char* op, std::initializer_list<Tensor<T>> inputs, const Tensor<T>& out,
                std::function<void()> backward) {
        if (checked_mode()) {
            check_finite(op, out.values(), "forward value");
        }
        if (!recording_ || !out.requires_grad()) return;
        Record r;
        r.op = op;
        r.backward = std::move(backward);
        if (checked_mode()) {
            for (const auto& in : inputs)
                if (in.defined() && in.requires_grad()) r.watched.push_back(in.ptr());
        }
        records_.push_back(std::move(r));
    }

    // Reverse-mode sweep from a scalar loss. Gradients accumulate into the
    // grad buffers of every requires_grad tensor reachable from the loss.
    void backward(const Tensor<T>& loss) {
        if (!loss.defined() || loss.size() != 1)
            throw ContractError("backward requires a scalar loss");
        if (!loss.requires_grad())
            throw ContractError("backward on a loss that does not require gradients");
        if (records_.empty()) throw ContractError("backward on an empty tape");
        loss.ptr()->ensure_grad();
        loss.ptr()->grad[0] += T(1);
        for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
            it->backward();
            if (checked_mode()) {
                for (const auto& w : it->watched)
                    if (!w->grad.empty()) check_finite(it->op, w->grad, "backward gradient");
            }
        }
    }

    std::size_t size() const { return records_.size(); }
    void clear() { records_.clear(); }

private:
    struct Record {
        const char* op;
        std::function<void()> backward;
        std::vector<std::shared_ptr<TensorImpl<T>>> watched;
    };

    static void check_finite(const char* op, const std::vector<T>& v, const char* what);

    std::vector<Record> records_;
    bool recording_ = true;
};

} // namespace tdmi
