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

template <typename T>
void im2col(const T* x, int ci, int h, int w, int kh, int kw, int stride, int pad, int ho, int wo,
            T* col) {
    std::size_t idx = 0;
    for (int c = 0; c < ci; ++c)
        for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx)
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    const bool row_ok = iy >= 0 && iy < h;
                    for (int ox = 0; ox < wo; ++ox, ++idx) {
                        const int ix = ox * stride - pad + kx;
                        col[idx] = (row_ok && ix >= 0 && ix < w)
                                       ? x[(static_cast<std::size_t>(c) * h + iy) * w + ix]
                                       : T(0);
                    }
                }
}

template <typename T>
void col2im_add(const T* col, int ci, int h, int w, int kh, int kw, int stride, int pad, int ho,
                int wo, T* dx) {
    std::size_t idx = 0;
    for (int c = 0; c < ci; ++c)
        for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx)
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    const bool row_ok = iy >= 0 && iy < h;
                    for (int ox = 0; ox < wo; ++ox, ++idx) {
                        const int ix = ox * stride - pad + kx;
                        if (row_ok && ix >= 0 && ix < w)
                            dx[(static_cast<std::size_t>(c) * h + iy) * w + ix] += col[idx];
                    }
                }
}

// One bilinear sample with zero padding outside the image. Corner weights
// and validity are produced once so forward value, image gradients and
// coordinate gradients share the same arithmetic.
template <typename T>
struct BilinearTap {
    int y0 = 0, x0 = 0;
    T ly = 0, lx = 0;
    bool inside = false;

    BilinearTap(T y, T x, int h, int w) {
        if (y <= T(-1) || y >= static_cast<T>(h) || x <= T(-1) || x >= static_cast<T>(w)) return;
        inside = true;
        y0 = static_cast<int>(std::floor(y));
        x0 = static_cast<int>(std::floor(x));
        ly = y - static_cast<T>(y0);
        lx = x - static_cast<T>(x0);
    }

    T corner(const T* img, int h, int w, int dy, int dx) const {
        const int yy = y0 + dy, xx = x0 + dx;
        if (yy < 0 || yy >= h || xx < 0 || xx >= w) return T(0);
        return img[static_cast<std::size_t>(yy) * w + xx];
    }

    T value(const T* img, int h, int w) const {
        if (!inside) return T(0);
        const T p00 = corner(img, h, w, 0, 0), p01 = corner(img, h, w, 0, 1);
        const T p10 = corner(img, h, w, 1, 0), p11 = corner(img, h, w, 1, 1);
        return (T(1) - ly) * ((T(1) - lx) * p00 + lx * p01) + ly * ((T(1) - lx) * p10 + lx * p11);
    }

    T dvalue_dy(const T* img, int h, int w) const {
        if (!inside) return T(0);
        const T p00 = corner(img, h, w, 0, 0), p01 = corner(img, h, w, 0, 1);
        const T p10 = corner(img, h, w, 1, 0), p11 = corner(img, h, w, 1, 1);
        return lx * (p11 - p01) + (T(1) - lx) * (p10 - p00);
    }

    T dvalue_dx(const T* img, int h, int w) const {
        if (!inside) return T(0);
        const T p00 = corner(img, h, w, 0, 0), p01 = corner(img, h, w, 0, 1);
        const T p10 = corner(img, h, w, 1, 0), p11 = corner(img, h, w, 1, 1);
        return ly * (p11 - p10) + (T(1) - ly) * (p01 - p00);
    }

    void scatter(T g, T* dimg, int h, int w) const {
        if (!inside) return;
        const T hy = T(1) - ly, hx = T(1) - lx;
        auto put = [&](int dy, int dx, T wgt) {
            const int yy = y0 + dy, xx = x0 + dx;
            if (yy < 0 || yy >= h || xx < 0 || xx >= w) return;
            dimg[static_cast<std::size_t>(yy) * w + xx] += g * wgt;
        };
        put(0, 0, hy * hx);
        put(0, 1, hy * lx);
        put(1, 0, ly * hx);
        put(1, 1, ly * lx);
    }
};

} // namespace

template <typename T>
Tensor<T> conv2d(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                 const Conv2dSpec& spec) {
    require(x.rank() == 4, "conv2d: input must be [N,C,H,W], got " + shape_str(x.shape()));
    require(w.rank() == 4, "conv2d: weight must be [Co,Ci,kh,kw], got " + shape_str(w.shape()));
    require(x.dim(1) == w.dim(1), "conv2d: channel mismatch, input " + shape_str(x.shape()) +
                                      " vs weight " + shape_str(w.shape()));
    require(spec.stride >= 1 && spec.pad >= 0, "conv2d: stride must be >=1 and padding >=0");
    const int n = x.dim(0), ci = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    if (b.defined()) require(b.rank() == 1 && b.dim(0) == co, "conv2d: bias must be [Co]");
    const int ho = (h + 2 * spec.pad - kh) / spec.stride + 1;
    const int wo = (wd + 2 * spec.pad - kw) / spec.stride + 1;
    require(h + 2 * spec.pad >= kh && wd + 2 * spec.pad >= kw,
            "conv2d: kernel larger than padded input");
    const int K = ci * kh * kw, P = ho * wo;

    Tensor<T> out(Shape{n, co, ho, wo});
    // im2col buffers are cached per sample for the backward pass.
    auto cols = std::make_shared<std::vector<std::vector<T>>>(static_cast<std::size_t>(n));
    CMap<T> wm(w.data(), co, K);
    for (int in = 0; in < n; ++in) {
        auto& col = (*cols)[static_cast<std::size_t>(in)];
        col.resize(static_cast<std::size_t>(K) * P);
        im2col(x.data() + static_cast<std::size_t>(in) * ci * h * wd, ci, h, wd, kh, kw, spec.stride,
               spec.pad, ho, wo, col.data());
        Map<T> om(out.data() + static_cast<std::size_t>(in) * co * P, co, P);
        om.noalias() = wm * CMap<T>(col.data(), K, P);
        if (b.defined())
            for (int oc = 0; oc < co; ++oc) om.row(oc).array() += b.values()[static_cast<std::size_t>(oc)];
    }

    out.set_requires_grad(x.requires_grad() || w.requires_grad() || (b.defined() && b.requires_grad()));
    auto xi = x.ptr(), wi = w.ptr(), oi = out.ptr();
    auto bi = b.defined() ? b.ptr() : nullptr;
    const Conv2dSpec sp = spec;
    if (!out.requires_grad()) (*cols).clear();
    tape.record("conv2d", {x, w, b.defined() ? b : x}, out,
                [xi, wi, bi, oi, cols, sp, n, ci, h, wd, co, kh, kw, ho, wo, K, P]() {
                    if (oi->grad.empty()) return;
                    // Verification hook: flips the weight-gradient sign when the
                    // TDMI_FAULT mutation is armed so the gradient battery can
                    // prove it detects a broken backward kernel.
                    const T wsign = fault_injected("conv2d_wgrad_sign") ? T(-1) : T(1);
                    for (int in = 0; in < n; ++in) {
                        CMap<T> go(oi->grad.data() + static_cast<std::size_t>(in) * co * P, co, P);
                        const auto& col = (*cols)[static_cast<std::size_t>(in)];
                        if (wi->requires_grad) {
                            wi->ensure_grad();
                            Map<T>(wi->grad.data(), co, K).noalias() +=
                                wsign * (go * CMap<T>(col.data(), K, P).transpose());
                        }
                        if (bi && bi->requires_grad) {
                            bi->ensure_grad();
                            for (int oc = 0; oc < co; ++oc)
                                bi->grad[static_cast<std::size_t>(oc)] += go.row(oc).sum();
                        }
                        if (xi->requires_grad) {
                            xi->ensure_grad();
                            std::vector<T> dcol(static_cast<std::size_t>(K) * P);
                            Map<T>(dcol.data(), K, P).noalias() =
                                CMap<T>(wi->value.data(), co, K).transpose() * go;
                            col2im_add(dcol.data(), ci, h, wd, kh, kw, sp.stride, sp.pad, ho, wo,
                                       xi->grad.data() + static_cast<std::size_t>(in) * ci * h * wd);
                        }
                    }
                });
    return out;
}

template <typename T>
Tensor<T> deform_conv2d(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& offsets,
                        const Tensor<T>& mask, const Tensor<T>& w, const Tensor<T>& b, int pad) {
    require(x.rank() == 4 && w.rank() == 4 && x.dim(1) == w.dim(1),
            "deform_conv2d: bad input/weight shapes " + shape_str(x.shape()) + ", " + shape_str(w.shape()));
    const int n = x.dim(0), ci = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int taps = kh * kw;
    const int ho = h + 2 * pad - kh + 1, wo = wd + 2 * pad - kw + 1;
    require(ho >= 1 && wo >= 1, "deform_conv2d: kernel larger than padded input");
    require(offsets.rank() == 4 && offsets.dim(0) == n && offsets.dim(1) == 2 * taps &&
                offsets.dim(2) == ho && offsets.dim(3) == wo,
            "deform_conv2d: offsets must be [N," + std::to_string(2 * taps) + ",Ho,Wo], got " +
                shape_str(offsets.shape()));
    require(mask.rank() == 4 && mask.dim(0) == n && mask.dim(1) == taps && mask.dim(2) == ho &&
                mask.dim(3) == wo,
            "deform_conv2d: mask must be [N," + std::to_string(taps) + ",Ho,Wo], got " +
                shape_str(mask.shape()));
    if (b.defined()) require(b.rank() == 1 && b.dim(0) == co, "deform_conv2d: bias must be [Co]");
    const int K = ci * taps, P = ho * wo;

    Tensor<T> out(Shape{n, co, ho, wo});
    auto cols = std::make_shared<std::vector<std::vector<T>>>(static_cast<std::size_t>(n));
    CMap<T> wm(w.data(), co, K);
    for (int in = 0; in < n; ++in) {
        auto& col = (*cols)[static_cast<std::size_t>(in)];
        col.assign(static_cast<std::size_t>(K) * P, T(0));
        const T* xs = x.data() + static_cast<std::size_t>(in) * ci * h * wd;
        const T* off = offsets.data() + static_cast<std::size_t>(in) * 2 * taps * P;
        const T* msk = mask.data() + static_cast<std::size_t>(in) * taps * P;
        for (int k = 0; k < taps; ++k) {
            const int ky = k / kw, kx = k % kw;
            for (int p = 0; p < P; ++p) {
                const int oy = p / wo, ox = p % wo;
                const T py = static_cast<T>(oy - pad + ky) + off[(2 * k) * P + p];
                const T px = static_cast<T>(ox - pad + kx) + off[(2 * k + 1) * P + p];
                const BilinearTap<T> tap(py, px, h, wd);
                const T m = msk[k * P + p];
                for (int c = 0; c < ci; ++c)
                    col[(static_cast<std::size_t>(c) * taps + k) * P + p] =
                        m * tap.value(xs + static_cast<std::size_t>(c) * h * wd, h, wd);
            }
        }
        Map<T> om(out.data() + static_cast<std::size_t>(in) * co * P, co, P);
        om.noalias() = wm * CMap<T>(col.data(), K, P);
        if (b.defined())
            for (int oc = 0; oc < co; ++oc) om.row(oc).array() += b.values()[static_cast<std::size_t>(oc)];
    }

    out.set_requires_grad(x.requires_grad() || offsets.requires_grad() || mask.requires_grad() ||
                          w.requires_grad() || (b.defined() && b.requires_grad()));
    auto xi = x.ptr(), offi = offsets.ptr(), mi = mask.ptr(), wi = w.ptr(), oi = out.ptr();
    auto bi = b.defined() ? b.ptr() : nullptr;
    if (!out.requires_grad()) (*cols).clear();
    tape.record(
        "deform_conv2d", {x, offsets, mask, w, b.defined() ? b : x}, out,
        [xi, offi, mi, wi, bi, oi, cols, pad, n, ci, h, wd, co, kh, kw, taps, ho, wo, K, P]() {
            if (oi->grad.empty()) return;
            for (int in = 0; in < n; ++in) {
                CMap<T> go(oi->grad.data() + static_cast<std::size_t>(in) * co * P, co, P);
                const auto& col = (*cols)[static_cast<std::size_t>(in)];
                if (wi->requires_grad) {
                    wi->ensure_grad();
                    Map<T>(wi->grad.data(), co, K).noalias() += go * CMap<T>(col.data(), K, P).transpose();
                }
                if (bi && bi->requires_grad) {
                    bi->ensure_grad();
                    for (int oc = 0; oc < co; ++oc) bi->grad[static_cast<std::size_t>(oc)] += go.row(oc).sum();
                }
                const bool need_x = xi->requires_grad;
                const bool need_off = offi->requires_grad;
                const bool need_msk = mi->requires_grad;
                if (!need_x && !need_off && !need_msk) continue;
                if (need_x) xi->ensure_grad();
                if (need_off) offi->ensure_grad();
                if (need_msk) mi->ensure_grad();
                std::vector<T> dcol(static_cast<std::size_t>(K) * P);
                Map<T>(dcol.data(), K, P).noalias() = CMap<T>(wi->value.data(), co, K).transpose() * go;
                const T* xs = xi->value.data() + static_cast<std::size_t>(in) * ci * h * wd;
                T* dxs = need_x ? xi->grad.data() + static_cast<std::size_t>(in) * ci * h * wd : nullptr;
                const T* off = offi->value.data() + static_cast<std::size_t>(in) * 2 * taps * P;
                const T* msk = mi->value.data() + static_cast<std::size_t>(in) * taps * P;
                T* doff = need_off ? offi->grad.data() + static_cast<std::size_t>(in) * 2 * taps * P : nullptr;
                T* dmsk = need_msk ? mi->grad.data() + static_cast<std::size_t>(in) * taps * P : nullptr;
                for (int k = 0; k < taps; ++k) {
                    const int ky = k / kw, kx = k % kw;
                    for (int p = 0; p < P; ++p) {
                        const int oy = p / wo, ox = p % wo;
                        const T py = static_cast<T>(oy - pad + ky) + off[(2 * k) * P + p];
                        const T px = static_cast<T>(ox - pad + kx) + off[(2 * k + 1) * P + p];
                        const BilinearTap<T> tap(py, px, h, wd);
                        const T m = msk[k * P + p];
                        T dm = 0, dy = 0, dx = 0;
                        for (int c = 0; c < ci; ++c) {
                            const T g = dcol[(static_cast<std::size_t>(c) * taps + k) * P + p];
                            if (g == T(0)) continue;
                            const T* img = xs + static_cast<std::size_t>(c) * h * wd;
                            if (need_msk) dm += g * tap.value(img, h, wd);
                            if (need_off) {
                                dy += g * m * tap.dvalue_dy(img, h, wd);
                                dx += g * m * tap.dvalue_dx(img, h, wd);
                            }
                            if (need_x) tap.scatter(g * m, dxs + static_cast<std::size_t>(c) * h * wd, h, wd);
                        }
                        if (need_msk) dmsk[k * P + p] += dm;
                        if (need_off) {
                            doff[(2 * k) * P + p] += dy;
                            doff[(2 * k + 1) * P + p] += dx;
                        }
                    }
                }
            }
        });
    return out;
}

template <typename T>
Tensor<T> bilinear_sample(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& coords) {
    require(x.rank() == 4, "bilinear_sample: input must be [N,C,H,W]");
    require(coords.rank() == 4 && coords.dim(0) == x.dim(0) && coords.dim(1) == 2,
            "bilinear_sample: coords must be [N,2,Ho,Wo], got " + shape_str(coords.shape()));
    if (checked_mode()) {
        for (T v : coords.values())
            if (!std::isfinite(static_cast<double>(v)))
                throw NumericError("bilinear_sample: non-finite coordinate");
    }
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int ho = coords.dim(2), wo = coords.dim(3);
    const int P = ho * wo;
    Tensor<T> out(Shape{n, c, ho, wo});
    for (int in = 0; in < n; ++in) {
        const T* xs = x.data() + static_cast<std::size_t>(in) * c * h * w;
        const T* cs = coords.data() + static_cast<std::size_t>(in) * 2 * P;
        T* os = out.data() + static_cast<std::size_t>(in) * c * P;
        for (int p = 0; p < P; ++p) {
            const BilinearTap<T> tap(cs[p], cs[P + p], h, w);
            for (int ch = 0; ch < c; ++ch)
                os[static_cast<std::size_t>(ch) * P + p] =
                    tap.value(xs + static_cast<std::size_t>(ch) * h * w, h, w);
        }
    }
    out.set_requires_grad(x.requires_grad() || coords.requires_grad());
    auto xi = x.ptr(), ci_ = coords.ptr(), oi = out.ptr();
    tape.record("bilinear_sample", {x, coords}, out, [xi, ci_, oi, n, c, h, w, ho, wo, P]() {
        if (oi->grad.empty()) return;
        const bool need_x = xi->requires_grad, need_c = ci_->requires_grad;
        if (need_x) xi->ensure_grad();
        if (need_c) ci_->ensure_grad();
        for (int in = 0; in < n; ++in) {
            const T* xs = xi->value.data() + static_cast<std::size_t>(in) * c * h * w;
            T* dxs = need_x ? xi->grad.data() + static_cast<std::size_t>(in) * c * h * w : nullptr;
            const T* cs = ci_->value.data() + static_cast<std::size_t>(in) * 2 * P;
            T* dcs = need_c ? ci_->grad.data() + static_cast<std::size_t>(in) * 2 * P : nullptr;
            const T* gos = oi->grad.data() + static_cast<std::size_t>(in) * c * P;
            for (int p = 0; p < P; ++p) {
                const BilinearTap<T> tap(cs[p], cs[P + p], h, w);
                T dy = 0, dx = 0;
                for (int ch = 0; ch < c; ++ch) {
                    const T g = gos[static_cast<std::size_t>(ch) * P + p];
                    if (g == T(0)) continue;
                    const T* img = xs + static_cast<std::size_t>(ch) * h * w;
                    if (need_x) tap.scatter(g, dxs + static_cast<std::size_t>(ch) * h * w, h, w);
                    if (need_c) {
                        dy += g * tap.dvalue_dy(img, h, w);
                        dx += g * tap.dvalue_dx(img, h, w);
                    }
                }
                if (need_c) {
                    dcs[p] += dy;
                    dcs[P + p] += dx;
                }
            }
        }
    });
    return out;
}

template <typename T>
Tensor<T> resize_bilinear(Tape<T>& tape, const Tensor<T>& x, int out_h, int out_w) {
    require(x.rank() == 4, "resize_bilinear expects [N,C,H,W]");
    require(out_h >= 1 && out_w >= 1, "resize_bilinear: bad target size");
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (out_h == h && out_w == w) {
        // Identity resize; still routed through a copy so gradients flow.
        return reshape(tape, x, x.shape());
    }
    // Half-pixel-center mapping with border replication.
    auto build_axis = [](int in_sz, int out_sz, std::vector<int>& i0, std::vector<int>& i1,
                         std::vector<T>& frac) {
        i0.resize(static_cast<std::size_t>(out_sz));
        i1.resize(static_cast<std::size_t>(out_sz));
        frac.resize(static_cast<std::size_t>(out_sz));
        const double s = static_cast<double>(in_sz) / out_sz;
        for (int o = 0; o < out_sz; ++o) {
            double src = (o + 0.5) * s - 0.5;
            src = std::min(std::max(src, 0.0), static_cast<double>(in_sz - 1));
            const int lo = static_cast<int>(std::floor(src));
            i0[static_cast<std::size_t>(o)] = lo;
            i1[static_cast<std::size_t>(o)] = std::min(lo + 1, in_sz - 1);
            frac[static_cast<std::size_t>(o)] = static_cast<T>(src - lo);
        }
    };
    auto ax = std::make_shared<std::array<std::vector<int>, 4>>();
    auto fr = std::make_shared<std::array<std::vector<T>, 2>>();
    build_axis(h, out_h, (*ax)[0], (*ax)[1], (*fr)[0]);
    build_axis(w, out_w, (*ax)[2], (*ax)[3], (*fr)[1]);

    Tensor<T> out(Shape{n, c, out_h, out_w});
    for (int i = 0; i < n * c; ++i) {
        const T* src = x.data() + static_cast<std::size_t>(i) * h * w;
        T* dst = out.data() + static_cast<std::size_t>(i) * out_h * out_w;
        for (int oy = 0; oy < out_h; ++oy) {
            const int y0 = (*ax)[0][oy], y1 = (*ax)[1][oy];
            const T fy = (*fr)[0][oy];
            for (int ox = 0; ox < out_w; ++ox) {
                const int x0 = (*ax)[2][ox], x1 = (*ax)[3][ox];
                const T fx = (*fr)[1][ox];
                const T top = (T(1) - fx) * src[static_cast<std::size_t>(y0) * w + x0] +
                              fx * src[static_cast<std::size_t>(y0) * w + x1];
                const T bot = (T(1) - fx) * src[static_cast<std::size_t>(y1) * w + x0] +
                              fx * src[static_cast<std::size_t>(y1) * w + x1];
                dst[static_cast<std::size_t>(oy) * out_w + ox] = (T(1) - fy) * top + fy * bot;
            }
        }
    }
    out.set_requires_grad(x.requires_grad());
    auto xi = x.ptr(), oi = out.ptr();
    tape.record("resize_bilinear", {x}, out, [xi, oi, ax, fr, n, c, h, w, out_h, out_w]() {
        if (oi->grad.empty() || !xi->requires_grad) return;
        xi->ensure_grad();
        for (int i = 0; i < n * c; ++i) {
            T* dsrc = xi->grad.data() + static_cast<std::size_t>(i) * h * w;
            const T* g = oi->grad.data() + static_cast<std::size_t>(i) * out_h * out_w;
            for (int oy = 0; oy < out_h; ++oy) {
                const int y0 = (*ax)[0][oy], y1 = (*ax)[1][oy];
                const T fy = (*fr)[0][oy];
                for (int ox = 0; ox < out_w; ++ox) {
                    const int x0 = (*ax)[2][ox], x1 = (*ax)[3][ox];
                    const T fx = (*fr)[1][ox];
                    const T gv = g[static_cast<std::size_t>(oy) * out_w + ox];
                    dsrc[static_cast<std::size_t>(y0) * w + x0] += gv * (T(1) - fy) * (T(1) - fx);
                    dsrc[static_cast<std::size_t>(y0) * w + x1] += gv * (T(1) - fy) * fx;
                    dsrc[static_cast<std::size_t>(y1) * w + x0] += gv * fy * (T(1) - fx);
                    dsrc[static_cast<std::size_t>(y1) * w + x1] += gv * fy * fx;
                }
            }
        }
    });
    return out;
}

#define TDMI_INSTANTIATE_CONV(T)                                                                   \
    template Tensor<T> conv2d(Tape<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,     \
                              const Conv2dSpec&);                                                  \
    template Tensor<T> deform_conv2d(Tape<T>&, const Tensor<T>&, const Tensor<T>&,                \
                                     const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int);  \
    template Tensor<T> bilinear_sample(Tape<T>&, const Tensor<T>&, const Tensor<T>&);             \
    template Tensor<T> resize_bilinear(Tape<T>&, const Tensor<T>&, int, int);

TDMI_INSTANTIATE_CONV(float)
TDMI_INSTANTIATE_CONV(double)

} // namespace tdmi::ops
