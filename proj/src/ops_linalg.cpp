#define EIGEN_DONT_PARALLELIZE
#include <Eigen/Dense>

#include <cmath>

#include "tdmi/ops.hpp"

namespace tdmi::ops {

namespace {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Map = Eigen::Map<MatRM<T>>;
template <typename T>
using CMap = Eigen::Map<const MatRM<T>>;

void require(bool cond, const std::string& msg) {
    if (!cond) throw ShapeError(msg);
}

} // namespace

template <typename T>
Tensor<T> matmul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
    require(a.rank() == 2 && b.rank() == 2 && a.dim(1) == b.dim(0),
            "matmul: incompatible shapes " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor<T> out(Shape{m, n});
    Map<T>(out.data(), m, n).noalias() = CMap<T>(a.data(), m, k) * CMap<T>(b.data(), k, n);
    out.set_requires_grad(a.requires_grad() || b.requires_grad());
    auto ai = a.ptr(), bi = b.ptr(), oi = out.ptr();
    tape.record("matmul", {a, b}, out, [ai, bi, oi, m, k, n]() {
        if (oi->grad.empty()) return;
        CMap<T> go(oi->grad.data(), m, n);
        if (ai->requires_grad) {
            ai->ensure_grad();
            Map<T>(ai->grad.data(), m, k).noalias() += go * CMap<T>(bi->value.data(), k, n).transpose();
        }
        if (bi->requires_grad) {
            bi->ensure_grad();
            Map<T>(bi->grad.data(), k, n).noalias() += CMap<T>(ai->value.data(), m, k).transpose() * go;
        }
    });
    return out;
}

template <typename T>
Tensor<T> matmul_bt(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
    require(a.rank() == 2 && b.rank() == 2 && a.dim(1) == b.dim(1),
            "matmul_bt: incompatible shapes " + shape_str(a.shape()) + " x " + shape_str(b.shape()) + "^T");
    const int m = a.dim(0), k = a.dim(1), n = b.dim(0);
    Tensor<T> out(Shape{m, n});
    Map<T>(out.data(), m, n).noalias() = CMap<T>(a.data(), m, k) * CMap<T>(b.data(), n, k).transpose();
    out.set_requires_grad(a.requires_grad() || b.requires_grad());
    auto ai = a.ptr(), bi = b.ptr(), oi = out.ptr();
    tape.record("matmul_bt", {a, b}, out, [ai, bi, oi, m, k, n]() {
        if (oi->grad.empty()) return;
        CMap<T> go(oi->grad.data(), m, n);
        if (ai->requires_grad) {
            ai->ensure_grad();
            Map<T>(ai->grad.data(), m, k).noalias() += go * CMap<T>(bi->value.data(), n, k);
        }
        if (bi->requires_grad) {
            bi->ensure_grad();
            Map<T>(bi->grad.data(), n, k).noalias() += go.transpose() * CMap<T>(ai->value.data(), m, k);
        }
    });
    return out;
}

template <typename T>
Tensor<T> add_rowvec(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& v) {
    require(x.rank() == 2 && v.rank() == 1 && v.dim(0) == x.dim(1),
            "add_rowvec: incompatible shapes " + shape_str(x.shape()) + " + " + shape_str(v.shape()));
    const int m = x.dim(0), n = x.dim(1);
    Tensor<T> out(x.shape());
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            out.values()[static_cast<std::size_t>(i) * n + j] =
                x.values()[static_cast<std::size_t>(i) * n + j] + v.values()[static_cast<std::size_t>(j)];
    out.set_requires_grad(x.requires_grad() || v.requires_grad());
    auto xi = x.ptr(), vi = v.ptr(), oi = out.ptr();
    tape.record("add_rowvec", {x, v}, out, [xi, vi, oi, m, n]() {
        if (oi->grad.empty()) return;
        if (xi->requires_grad) {
            xi->ensure_grad();
            for (std::size_t i = 0; i < oi->grad.size(); ++i) xi->grad[i] += oi->grad[i];
        }
        if (vi->requires_grad) {
            vi->ensure_grad();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j)
                    vi->grad[static_cast<std::size_t>(j)] += oi->grad[static_cast<std::size_t>(i) * n + j];
        }
    });
    return out;
}

template <typename T>
Tensor<T> diag_mean(Tape<T>& tape, const Tensor<T>& s) {
    require(s.rank() == 2 && s.dim(0) == s.dim(1), "diag_mean expects a square matrix");
    const int b = s.dim(0);
    Tensor<T> out(Shape{1});
    T acc = 0;
    for (int i = 0; i < b; ++i) acc += s.values()[static_cast<std::size_t>(i) * b + i];
    out.values()[0] = acc / static_cast<T>(b);
    out.set_requires_grad(s.requires_grad());
    auto si = s.ptr(), oi = out.ptr();
    tape.record("diag_mean", {s}, out, [si, oi, b]() {
        if (oi->grad.empty() || !si->requires_grad) return;
        si->ensure_grad();
        const T g = oi->grad[0] / static_cast<T>(b);
        for (int i = 0; i < b; ++i) si->grad[static_cast<std::size_t>(i) * b + i] += g;
    });
    return out;
}

template <typename T>
Tensor<T> rowwise_logsumexp(Tape<T>& tape, const Tensor<T>& s) {
    require(s.rank() == 2, "rowwise_logsumexp expects [B,N]");
    const int b = s.dim(0), n = s.dim(1);
    Tensor<T> out(Shape{b});
    for (int i = 0; i < b; ++i) {
        const T* row = s.data() + static_cast<std::size_t>(i) * n;
        T mx = row[0];
        for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        T acc = 0;
        for (int j = 0; j < n; ++j) acc += std::exp(row[j] - mx);
        out.values()[static_cast<std::size_t>(i)] = mx + std::log(acc);
    }
    out.set_requires_grad(s.requires_grad());
    auto si = s.ptr(), oi = out.ptr();
    tape.record("rowwise_logsumexp", {s}, out, [si, oi, b, n]() {
        if (oi->grad.empty() || !si->requires_grad) return;
        si->ensure_grad();
        for (int i = 0; i < b; ++i) {
            const T g = oi->grad[static_cast<std::size_t>(i)];
            if (g == T(0)) continue;
            const T lse = oi->value[static_cast<std::size_t>(i)];
            const T* row = si->value.data() + static_cast<std::size_t>(i) * n;
            T* grow = si->grad.data() + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) grow[j] += g * std::exp(row[j] - lse);
        }
    });
    return out;
}

#define TDMI_INSTANTIATE_LINALG(T)                                                  \
    template Tensor<T> matmul(Tape<T>&, const Tensor<T>&, const Tensor<T>&);        \
    template Tensor<T> matmul_bt(Tape<T>&, const Tensor<T>&, const Tensor<T>&);     \
    template Tensor<T> add_rowvec(Tape<T>&, const Tensor<T>&, const Tensor<T>&);    \
    template Tensor<T> diag_mean(Tape<T>&, const Tensor<T>&);                       \
    template Tensor<T> rowwise_logsumexp(Tape<T>&, const Tensor<T>&);

TDMI_INSTANTIATE_LINALG(float)
TDMI_INSTANTIATE_LINALG(double)

} // namespace tdmi::ops
