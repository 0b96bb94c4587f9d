#include "tdmi/ops.hpp"

#include <cmath>

namespace tdmi::ops {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw ShapeError(msg);
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    require(a.shape() == b.shape(), std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                        " vs " + shape_str(b.shape()));
}

template <typename T>
bool any_rg(std::initializer_list<Tensor<T>> xs) {
    for (const auto& x : xs)
        if (x.defined() && x.requires_grad()) return true;
    return false;
}

// Shared implementation for binary elementwise ops with constant partials.
template <typename T, typename Fwd, typename Bwd>
Tensor<T> binary_ew(Tape<T>& tape, const char* name, const Tensor<T>& a, const Tensor<T>& b,
                    Fwd fwd, Bwd bwd) {
    require_same_shape(a, b, name);
    Tensor<T> out(a.shape());
    const std::size_t n = a.values().size();
    for (std::size_t i = 0; i < n; ++i) out.values()[i] = fwd(a.values()[i], b.values()[i]);
    out.set_requires_grad(any_rg<T>({a, b}));
    auto ai = a.ptr(), bi = b.ptr(), oi = out.ptr();
    tape.record(name, {a, b}, out, [ai, bi, oi, bwd]() {
        if (oi->grad.empty()) return;
        const std::size_t n = oi->grad.size();
        if (ai->requires_grad) {
            ai->ensure_grad();
            for (std::size_t i = 0; i < n; ++i)
                ai->grad[i] += bwd(ai->value[i], bi->value[i], true) * oi->grad[i];
        }
        if (bi->requires_grad) {
            bi->ensure_grad();
            for (std::size_t i = 0; i < n; ++i)
                bi->grad[i] += bwd(ai->value[i], bi->value[i], false) * oi->grad[i];
        }
    });
    return out;
}

// Unary elementwise op; dydx receives (x, y).
template <typename T, typename Fwd, typename Bwd>
Tensor<T> unary_ew(Tape<T>& tape, const char* name, const Tensor<T>& x, Fwd fwd, Bwd dydx) {
    Tensor<T> out(x.shape());
    const std::size_t n = x.values().size();
    for (std::size_t i = 0; i < n; ++i) out.values()[i] = fwd(x.values()[i]);
    out.set_requires_grad(x.requires_grad());
    auto xi = x.ptr(), oi = out.ptr();
    tape.record(name, {x}, out, [xi, oi, dydx]() {
        if (oi->grad.empty() || !xi->requires_grad) return;
        xi->ensure_grad();
        const std::size_t n = oi->grad.size();
        for (std::size_t i = 0; i < n; ++i)
            xi->grad[i] += dydx(xi->value[i], oi->value[i]) * oi->grad[i];
    });
    return out;
}

} // namespace

template <typename T>
Tensor<T> add(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
    return binary_ew(
        tape, "add", a, b, [](T x, T y) { return x + y; },
        [](T, T, bool) { return T(1); });
}

template <typename T>
Tensor<T> sub(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
    return binary_ew(
        tape, "sub", a, b, [](T x, T y) { return x - y; },
        [](T, T, bool wrt_a) { return wrt_a ? T(1) : T(-1); });
}

template <typename T>
Tensor<T> mul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
    return binary_ew(
        tape, "mul", a, b, [](T x, T y) { return x * y; },
        [](T x, T y, bool wrt_a) { return wrt_a ? y : x; });
}

template <typename T>
Tensor<T> neg(Tape<T>& tape, const Tensor<T>& x) {
    return unary_ew(
        tape, "neg", x, [](T v) { return -v; }, [](T, T) { return T(-1); });
}

template <typename T>
Tensor<T> scale(Tape<T>& tape, const Tensor<T>& x, T c) {
    return unary_ew(
        tape, "scale", x, [c](T v) { return c * v; }, [c](T, T) { return c; });
}

template <typename T>
Tensor<T> add_scalar(Tape<T>& tape, const Tensor<T>& x, T c) {
    return unary_ew(
        tape, "add_scalar", x, [c](T v) { return v + c; }, [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> sigmoid(Tape<T>& tape, const Tensor<T>& x) {
    return unary_ew(
        tape, "sigmoid", x,
        [](T v) {
            if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
            const T e = std::exp(v);
            return e / (T(1) + e);
        },
        [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> leaky_relu(Tape<T>& tape, const Tensor<T>& x, T slope) {
    return unary_ew(
        tape, "leaky_relu", x, [slope](T v) { return v > T(0) ? v : slope * v; },
        [slope](T v, T) { return v > T(0) ? T(1) : slope; });
}

template <typename T>
Tensor<T> exp(Tape<T>& tape, const Tensor<T>& x) {
    return unary_ew(
        tape, "exp", x, [](T v) { return std::exp(v); }, [](T, T y) { return y; });
}

template <typename T>
Tensor<T> log(Tape<T>& tape, const Tensor<T>& x) {
    return unary_ew(
        tape, "log", x, [](T v) { return std::log(v); }, [](T v, T) { return T(1) / v; });
}

template <typename T>
Tensor<T> softplus(Tape<T>& tape, const Tensor<T>& x) {
    return unary_ew(
        tape, "softplus", x,
        [](T v) { return std::max(v, T(0)) + std::log1p(std::exp(-std::abs(v))); },
        [](T v, T) {
            if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
            const T e = std::exp(v);
            return e / (T(1) + e);
        });
}

template <typename T>
Tensor<T> sum_all(Tape<T>& tape, const Tensor<T>& x) {
    Tensor<T> out(Shape{1});
    T acc = 0;
    for (T v : x.values()) acc += v;
    out.values()[0] = acc;
    out.set_requires_grad(x.requires_grad());
    auto xi = x.ptr(), oi = out.ptr();
    tape.record("sum_all", {x}, out, [xi, oi]() {
        if (oi->grad.empty() || !xi->requires_grad) return;
        xi->ensure_grad();
        const T g = oi->grad[0];
        for (auto& gi : xi->grad) gi += g;
    });
    return out;
}

template <typename T>
Tensor<T> mean_all(Tape<T>& tape, const Tensor<T>& x) {
    return scale(tape, sum_all(tape, x), T(1) / static_cast<T>(x.size()));
}

template <typename T>
Tensor<T> sum_rows(Tape<T>& tape, const Tensor<T>& x) {
    require(x.rank() == 2, "sum_rows expects a [M,N] tensor, got " + shape_str(x.shape()));
    const int m = x.dim(0), n = x.dim(1);
    Tensor<T> out(Shape{m});
    for (int i = 0; i < m; ++i) {
        T acc = 0;
        for (int j = 0; j < n; ++j) acc += x.values()[static_cast<std::size_t>(i) * n + j];
        out.values()[static_cast<std::size_t>(i)] = acc;
    }
    out.set_requires_grad(x.requires_grad());
    auto xi = x.ptr(), oi = out.ptr();
    tape.record("sum_rows", {x}, out, [xi, oi, m, n]() {
        if (oi->grad.empty() || !xi->requires_grad) return;
        xi->ensure_grad();
        for (int i = 0; i < m; ++i) {
            const T g = oi->grad[static_cast<std::size_t>(i)];
            for (int j = 0; j < n; ++j) xi->grad[static_cast<std::size_t>(i) * n + j] += g;
        }
    });
    return out;
}

template <typename T>
Tensor<T> global_avg_pool(Tape<T>& tape, const Tensor<T>& x) {
    require(x.rank() == 4, "global_avg_pool expects [N,C,H,W], got " + shape_str(x.shape()));
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int hw = h * w;
    Tensor<T> out(Shape{n, c});
    for (int i = 0; i < n * c; ++i) {
        T acc = 0;
        const T* p = x.data() + static_cast<std::size_t>(i) * hw;
        for (int k = 0; k < hw; ++k) acc += p[k];
        out.values()[static_cast<std::size_t>(i)] = acc / static_cast<T>(hw);
    }
    out.set_requires_grad(x.requires_grad());
    auto xi = x.ptr(), oi = out.ptr();
    tape.record("global_avg_pool", {x}, out, [xi, oi, n, c, hw]() {
        if (oi->grad.empty() || !xi->requires_grad) return;
        xi->ensure_grad();
        for (int i = 0; i < n * c; ++i) {
            const T g = oi->grad[static_cast<std::size_t>(i)] / static_cast<T>(hw);
            T* p = xi->grad.data() + static_cast<std::size_t>(i) * hw;
            for (int k = 0; k < hw; ++k) p[k] += g;
        }
    });
    return out;
}

template <typename T>
Tensor<T> reshape(Tape<T>& tape, const Tensor<T>& x, Shape new_shape) {
    require(shape_numel(new_shape) == x.size(),
            "reshape: numel mismatch " + shape_str(x.shape()) + " -> " + shape_str(new_shape));
    Tensor<T> out(std::move(new_shape), x.values());
    out.set_requires_grad(x.requires_grad());
    auto xi = x.ptr(), oi = out.ptr();
    tape.record("reshape", {x}, out, [xi, oi]() {
        if (oi->grad.empty() || !xi->requires_grad) return;
        xi->ensure_grad();
        for (std::size_t i = 0; i < oi->grad.size(); ++i) xi->grad[i] += oi->grad[i];
    });
    return out;
}

template <typename T>
Tensor<T> concat_channels(Tape<T>& tape, const std::vector<Tensor<T>>& xs) {
    require(!xs.empty(), "concat_channels on empty list");
    const int n = xs[0].dim(0), h = xs[0].dim(2), w = xs[0].dim(3);
    int total_c = 0;
    bool rg = false;
    for (const auto& x : xs) {
        require(x.rank() == 4 && x.dim(0) == n && x.dim(2) == h && x.dim(3) == w,
                "concat_channels: incompatible input " + shape_str(x.shape()));
        total_c += x.dim(1);
        rg = rg || x.requires_grad();
    }
    Tensor<T> out(Shape{n, total_c, h, w});
    const int hw = h * w;
    int c_off = 0;
    for (const auto& x : xs) {
        const int c = x.dim(1);
        for (int in = 0; in < n; ++in)
            std::copy(x.data() + static_cast<std::size_t>(in) * c * hw,
                      x.data() + static_cast<std::size_t>(in + 1) * c * hw,
                      out.data() + (static_cast<std::size_t>(in) * total_c + c_off) * hw);
        c_off += c;
    }
    out.set_requires_grad(rg);
    auto oi = out.ptr();
    std::vector<std::shared_ptr<TensorImpl<T>>> impls;
    for (const auto& x : xs) impls.push_back(x.ptr());
    // record() only needs the inputs list for checked-mode bookkeeping; the
    // closure carries the full set itself.
    tape.record("concat_channels", {xs[0]}, out, [impls, oi, n, total_c, hw]() {
        if (oi->grad.empty()) return;
        int c_off = 0;
        for (const auto& xi : impls) {
            const int c = xi->shape[1];
            if (xi->requires_grad) {
                xi->ensure_grad();
                for (int in = 0; in < n; ++in) {
                    const T* src = oi->grad.data() + (static_cast<std::size_t>(in) * total_c + c_off) * hw;
                    T* dst = xi->grad.data() + static_cast<std::size_t>(in) * c * hw;
                    for (int k = 0; k < c * hw; ++k) dst[k] += src[k];
                }
            }
            c_off += c;
        }
    });
    return out;
}

template <typename T>
Tensor<T> slice_channels(Tape<T>& tape, const Tensor<T>& x, int c0, int c1) {
    require(x.rank() == 4, "slice_channels expects [N,C,H,W]");
    require(0 <= c0 && c0 < c1 && c1 <= x.dim(1), "slice_channels: bad range");
    const int n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
    const int cs = c1 - c0;
    Tensor<T> out(Shape{n, cs, x.dim(2), x.dim(3)});
    for (int in = 0; in < n; ++in)
        std::copy(x.data() + (static_cast<std::size_t>(in) * c + c0) * hw,
                  x.data() + (static_cast<std::size_t>(in) * c + c1) * hw,
                  out.data() + static_cast<std::size_t>(in) * cs * hw);
    out.set_requires_grad(x.requires_grad());
    auto xi = x.ptr(), oi = out.ptr();
    tape.record("slice_channels", {x}, out, [xi, oi, n, c, c0, cs, hw]() {
        if (oi->grad.empty() || !xi->requires_grad) return;
        xi->ensure_grad();
        for (int in = 0; in < n; ++in) {
            const T* src = oi->grad.data() + static_cast<std::size_t>(in) * cs * hw;
            T* dst = xi->grad.data() + (static_cast<std::size_t>(in) * c + c0) * hw;
            for (int k = 0; k < cs * hw; ++k) dst[k] += src[k];
        }
    });
    return out;
}

template <typename T>
Tensor<T> concat_rows(Tape<T>& tape, const std::vector<Tensor<T>>& xs) {
    require(!xs.empty(), "concat_rows on empty list");
    const int cols = xs[0].dim(1);
    int rows = 0;
    bool rg = false;
    for (const auto& x : xs) {
        require(x.rank() == 2 && x.dim(1) == cols, "concat_rows: incompatible input");
        rows += x.dim(0);
        rg = rg || x.requires_grad();
    }
    Tensor<T> out(Shape{rows, cols});
    std::size_t off = 0;
    for (const auto& x : xs) {
        std::copy(x.values().begin(), x.values().end(), out.values().begin() + off);
        off += x.values().size();
    }
    out.set_requires_grad(rg);
    auto oi = out.ptr();
    std::vector<std::shared_ptr<TensorImpl<T>>> impls;
    for (const auto& x : xs) impls.push_back(x.ptr());
    tape.record("concat_rows", {xs[0]}, out, [impls, oi]() {
        if (oi->grad.empty()) return;
        std::size_t off = 0;
        for (const auto& xi : impls) {
            if (xi->requires_grad) {
                xi->ensure_grad();
                for (std::size_t i = 0; i < xi->value.size(); ++i) xi->grad[i] += oi->grad[off + i];
            }
            off += xi->value.size();
        }
    });
    return out;
}

template <typename T>
Tensor<T> slice_rows(Tape<T>& tape, const Tensor<T>& x, int r0, int r1) {
    require(x.rank() == 2, "slice_rows expects [M,N]");
    require(0 <= r0 && r0 < r1 && r1 <= x.dim(0), "slice_rows: bad range");
    const int n = x.dim(1);
    Tensor<T> out(Shape{r1 - r0, n});
    std::copy(x.data() + static_cast<std::size_t>(r0) * n, x.data() + static_cast<std::size_t>(r1) * n,
              out.data());
    out.set_requires_grad(x.requires_grad());
    auto xi = x.ptr(), oi = out.ptr();
    tape.record("slice_rows", {x}, out, [xi, oi, r0, n]() {
        if (oi->grad.empty() || !xi->requires_grad) return;
        xi->ensure_grad();
        for (std::size_t i = 0; i < oi->grad.size(); ++i)
            xi->grad[static_cast<std::size_t>(r0) * n + i] += oi->grad[i];
    });
    return out;
}

template <typename T>
Tensor<T> channel_scale(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& s) {
    require(x.rank() == 4, "channel_scale expects x as [N,C,H,W]");
    require(s.rank() == 2 && s.dim(0) == x.dim(0) && s.dim(1) == x.dim(1),
            "channel_scale expects s as [N,C] matching x, got " + shape_str(s.shape()));
    const int n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
    Tensor<T> out(x.shape());
    for (int i = 0; i < n * c; ++i) {
        const T sv = s.values()[static_cast<std::size_t>(i)];
        const T* src = x.data() + static_cast<std::size_t>(i) * hw;
        T* dst = out.data() + static_cast<std::size_t>(i) * hw;
        for (int k = 0; k < hw; ++k) dst[k] = src[k] * sv;
    }
    out.set_requires_grad(x.requires_grad() || s.requires_grad());
    auto xi = x.ptr(), si = s.ptr(), oi = out.ptr();
    tape.record("channel_scale", {x, s}, out, [xi, si, oi, n, c, hw]() {
        if (oi->grad.empty()) return;
        if (xi->requires_grad) {
            xi->ensure_grad();
            for (int i = 0; i < n * c; ++i) {
                const T sv = si->value[static_cast<std::size_t>(i)];
                const T* g = oi->grad.data() + static_cast<std::size_t>(i) * hw;
                T* dst = xi->grad.data() + static_cast<std::size_t>(i) * hw;
                for (int k = 0; k < hw; ++k) dst[k] += g[k] * sv;
            }
        }
        if (si->requires_grad) {
            si->ensure_grad();
            for (int i = 0; i < n * c; ++i) {
                const T* g = oi->grad.data() + static_cast<std::size_t>(i) * hw;
                const T* xv = xi->value.data() + static_cast<std::size_t>(i) * hw;
                T acc = 0;
                for (int k = 0; k < hw; ++k) acc += g[k] * xv[k];
                si->grad[static_cast<std::size_t>(i)] += acc;
            }
        }
    });
    return out;
}

#define TDMI_INSTANTIATE_BASIC(T)                                                          \
    template Tensor<T> add(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                  \
    template Tensor<T> sub(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                  \
    template Tensor<T> mul(Tape<T>&, const Tensor<T>&, const Tensor<T>&);                  \
    template Tensor<T> neg(Tape<T>&, const Tensor<T>&);                                    \
    template Tensor<T> scale(Tape<T>&, const Tensor<T>&, T);                               \
    template Tensor<T> add_scalar(Tape<T>&, const Tensor<T>&, T);                          \
    template Tensor<T> sigmoid(Tape<T>&, const Tensor<T>&);                                \
    template Tensor<T> leaky_relu(Tape<T>&, const Tensor<T>&, T);                          \
    template Tensor<T> exp(Tape<T>&, const Tensor<T>&);                                    \
    template Tensor<T> log(Tape<T>&, const Tensor<T>&);                                    \
    template Tensor<T> softplus(Tape<T>&, const Tensor<T>&);                               \
    template Tensor<T> sum_all(Tape<T>&, const Tensor<T>&);                                \
    template Tensor<T> mean_all(Tape<T>&, const Tensor<T>&);                               \
    template Tensor<T> sum_rows(Tape<T>&, const Tensor<T>&);                               \
    template Tensor<T> global_avg_pool(Tape<T>&, const Tensor<T>&);                        \
    template Tensor<T> reshape(Tape<T>&, const Tensor<T>&, Shape);                         \
    template Tensor<T> concat_channels(Tape<T>&, const std::vector<Tensor<T>>&);           \
    template Tensor<T> slice_channels(Tape<T>&, const Tensor<T>&, int, int);               \
    template Tensor<T> concat_rows(Tape<T>&, const std::vector<Tensor<T>>&);               \
    template Tensor<T> slice_rows(Tape<T>&, const Tensor<T>&, int, int);                   \
    template Tensor<T> channel_scale(Tape<T>&, const Tensor<T>&, const Tensor<T>&);

TDMI_INSTANTIATE_BASIC(float)
TDMI_INSTANTIATE_BASIC(double)

} // namespace tdmi::ops
