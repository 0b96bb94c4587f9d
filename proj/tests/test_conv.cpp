#include <doctest.h>

#include <cmath>

#include "tdmi/gradcheck.hpp"
#include "tdmi/ops.hpp"
#include "tdmi/rng.hpp"

using namespace tdmi;

namespace {

// Independent reference: direct 6-nested-loop cross-correlation. Kept free of
// any shared code with ops::conv2d so it can serve as an oracle.
Tensor<double> conv2d_reference(const Tensor<double>& x, const Tensor<double>& w,
                                const Tensor<double>& b, int stride, int pad) {
    const int n = x.dim(0), ci = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int ho = (h + 2 * pad - kh) / stride + 1;
    const int wo = (wd + 2 * pad - kw) / stride + 1;
    Tensor<double> out(Shape{n, co, ho, wo});
    for (int in = 0; in < n; ++in)
        for (int oc = 0; oc < co; ++oc)
            for (int oy = 0; oy < ho; ++oy)
                for (int ox = 0; ox < wo; ++ox) {
                    double acc = b.defined() ? b.values()[oc] : 0.0;
                    for (int ic = 0; ic < ci; ++ic)
                        for (int ky = 0; ky < kh; ++ky)
                            for (int kx = 0; kx < kw; ++kx) {
                                const int iy = oy * stride - pad + ky;
                                const int ix = ox * stride - pad + kx;
                                if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
                                acc += x.values()[((in * ci + ic) * h + iy) * wd + ix] *
                                       w.values()[((oc * ci + ic) * kh + ky) * kw + kx];
                            }
                    out.values()[((in * co + oc) * ho + oy) * wo + ox] = acc;
                }
    return out;
}

Tensor<double> random_tensor(Rng& rng, Shape shape, bool requires_grad = false) {
    Tensor<double> t(std::move(shape), 0.0, requires_grad);
    for (auto& v : t.values()) v = rng.gaussian();
    return t;
}

} // namespace

TEST_CASE("conv2d pinned examples") {
    Tape<double> tape;
    // 1x1 identity
    Tensor<double> x(Shape{1, 1, 1, 1}, std::vector<double>{5.0});
    Tensor<double> w(Shape{1, 1, 1, 1}, std::vector<double>{1.0});
    Tensor<double> b(Shape{1}, std::vector<double>{0.0});
    auto y = ops::conv2d(tape, x, w, b, {.stride = 1, .pad = 0});
    CHECK(y.values()[0] == 5.0);

    // 3x3 ones * 3x3 ones, pad 1: center counts 9 overlaps, corners 4
    Tensor<double> xo(Shape{1, 1, 3, 3}, 1.0);
    Tensor<double> wo(Shape{1, 1, 3, 3}, 1.0);
    auto yo = ops::conv2d(tape, xo, wo, Tensor<double>(), {.stride = 1, .pad = 1});
    CHECK(yo.values()[4] == 9.0);
    CHECK(yo.values()[0] == 4.0);
    CHECK(yo.values()[2] == 4.0);
    CHECK(yo.values()[6] == 4.0);
    CHECK(yo.values()[8] == 4.0);
}

TEST_CASE("conv2d matches the nested-loop reference on 50 random configs") {
    Rng rng(101);
    Tape<double> tape(false);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = rng.uniform_int(1, 2);
        const int ci = rng.uniform_int(1, 4);
        const int co = rng.uniform_int(1, 4);
        const int k = rng.bernoulli(0.7) ? 3 : 1;
        const int stride = rng.uniform_int(1, 2);
        const int pad = rng.uniform_int(0, 1);
        const int h = rng.uniform_int(k, 7);
        const int wd = rng.uniform_int(k, 7);
        auto x = random_tensor(rng, {n, ci, h, wd});
        auto w = random_tensor(rng, {co, ci, k, k});
        auto b = random_tensor(rng, {co});
        auto got = ops::conv2d(tape, x, w, b, {.stride = stride, .pad = pad});
        auto want = conv2d_reference(x, w, b, stride, pad);
        REQUIRE(got.shape() == want.shape());
        double max_diff = 0;
        for (std::size_t i = 0; i < got.values().size(); ++i)
            max_diff = std::max(max_diff, std::abs(got.values()[i] - want.values()[i]));
        INFO("trial " << trial << " shape " << shape_str(got.shape()));
        CHECK(max_diff < 1e-10);
    }
}

TEST_CASE("conv2d random input vs reference at double precision (1x2x5x5)") {
    Rng rng(55);
    Tape<double> tape(false);
    auto x = random_tensor(rng, {1, 2, 5, 5});
    auto w = random_tensor(rng, {3, 2, 3, 3});
    auto b = random_tensor(rng, {3});
    auto got = ops::conv2d(tape, x, w, b, {.stride = 1, .pad = 1});
    auto want = conv2d_reference(x, w, b, 1, 1);
    for (std::size_t i = 0; i < got.values().size(); ++i)
        CHECK(std::abs(got.values()[i] - want.values()[i]) < 1e-12);
}

TEST_CASE("conv2d shape errors") {
    Tape<double> tape;
    Tensor<double> x(Shape{1, 2, 4, 4});
    Tensor<double> w(Shape{1, 3, 3, 3}); // channel mismatch
    CHECK_THROWS_AS(ops::conv2d(tape, x, w, Tensor<double>(), {.stride = 1, .pad = 1}), ShapeError);
}

TEST_CASE("conv2d gradients (input, weight, bias) pass grad_check") {
    GradCheckOptions opt;
    opt.eps = 1e-6;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Rng rng(seed * 77);
        auto x = random_tensor(rng, {2, 2, 5, 4});
        auto w = random_tensor(rng, {3, 2, 3, 3});
        auto b = random_tensor(rng, {3});
        const int stride = rng.uniform_int(1, 2);
        ops::Conv2dSpec spec{.stride = stride, .pad = 1};
        INFO("seed " << seed << " stride " << stride);
        CHECK(grad_check<double>(
                  [w, b, spec](Tape<double>& t, const Tensor<double>& v) {
                      return ops::conv2d(t, v, w, b, spec);
                  },
                  x, opt) < 1e-4);
        CHECK(grad_check<double>(
                  [x, b, spec](Tape<double>& t, const Tensor<double>& v) {
                      return ops::conv2d(t, x, v, b, spec);
                  },
                  w, opt) < 1e-4);
        CHECK(grad_check<double>(
                  [x, w, spec](Tape<double>& t, const Tensor<double>& v) {
                      return ops::conv2d(t, x, w, v, spec);
                  },
                  b, opt) < 1e-4);
    }
}

TEST_CASE("bilinear_sample pinned examples") {
    Tape<double> tape;
    Rng rng(21);
    auto x = random_tensor(rng, {1, 1, 5, 6});

    // integer coordinate hits the exact pixel
    Tensor<double> c1(Shape{1, 2, 1, 1}, std::vector<double>{2.0, 3.0});
    auto s1 = ops::bilinear_sample(tape, x, c1);
    CHECK(s1.values()[0] == doctest::Approx(x.values()[2 * 6 + 3]).epsilon(1e-15));

    // midway between 0 and 1 valued pixels -> 0.5
    Tensor<double> img(Shape{1, 1, 1, 2}, std::vector<double>{0.0, 1.0});
    Tensor<double> c2(Shape{1, 2, 1, 1}, std::vector<double>{0.0, 0.5});
    CHECK(ops::bilinear_sample(tape, img, c2).values()[0] == doctest::Approx(0.5));

    // far out of bounds -> 0 (zero padding rule)
    Tensor<double> c3(Shape{1, 2, 1, 1}, std::vector<double>{-10.0, -10.0});
    CHECK(ops::bilinear_sample(tape, x, c3).values()[0] == 0.0);
}

TEST_CASE("bilinear_sample gradients w.r.t. image and coordinates") {
    GradCheckOptions opt;
    opt.eps = 1e-6;
    Rng rng(23);
    auto x = random_tensor(rng, {1, 2, 5, 5});
    Tensor<double> coords(Shape{1, 2, 3, 3});
    for (std::size_t i = 0; i < 9; ++i) {
        coords.values()[i] = rng.uniform(-0.6, 4.6);     // y, including the partial border band
        coords.values()[9 + i] = rng.uniform(-0.6, 4.6); // x
    }
    CHECK(grad_check<double>(
              [coords](Tape<double>& t, const Tensor<double>& v) {
                  return ops::bilinear_sample(t, v, coords);
              },
              x, opt) < 1e-4);
    CHECK(grad_check<double>(
              [x](Tape<double>& t, const Tensor<double>& v) { return ops::bilinear_sample(t, x, v); },
              coords, opt) < 1e-4);
}

TEST_CASE("deform_conv2d with zero offsets and unit mask equals conv2d") {
    Rng rng(31);
    Tape<double> tape(false);
    for (int trial = 0; trial < 5; ++trial) {
        auto x = random_tensor(rng, {1, 3, 6, 5});
        auto w = random_tensor(rng, {4, 3, 3, 3});
        auto b = random_tensor(rng, {4});
        Tensor<double> off(Shape{1, 18, 6, 5}, 0.0);
        Tensor<double> mask(Shape{1, 9, 6, 5}, 1.0);
        auto got = ops::deform_conv2d(tape, x, off, mask, w, b, 1);
        auto want = conv2d_reference(x, w, b, 1, 1);
        REQUIRE(got.shape() == want.shape());
        for (std::size_t i = 0; i < got.values().size(); ++i)
            CHECK(std::abs(got.values()[i] - want.values()[i]) < 1e-10);
    }
}

TEST_CASE("deform_conv2d integer offset (0,1) equals conv of column-shifted input") {
    Rng rng(37);
    Tape<double> tape(false);
    auto x = random_tensor(rng, {1, 2, 5, 5});
    auto w = random_tensor(rng, {3, 2, 3, 3});
    Tensor<double> off(Shape{1, 18, 5, 5}, 0.0);
    // dy = 0, dx = +1 for every tap: equivalent to sampling the input shifted
    // left by one column (with zero fill on the right edge).
    for (int k = 0; k < 9; ++k)
        for (int p = 0; p < 25; ++p) off.values()[(2 * k + 1) * 25 + p] = 1.0;
    Tensor<double> mask(Shape{1, 9, 5, 5}, 1.0);
    auto got = ops::deform_conv2d(tape, x, off, mask, w, Tensor<double>(), 1);

    Tensor<double> shifted(Shape{1, 2, 5, 5}, 0.0);
    for (int c = 0; c < 2; ++c)
        for (int y = 0; y < 5; ++y)
            for (int xx = 0; xx < 4; ++xx)
                shifted.values()[(c * 5 + y) * 5 + xx] = x.values()[(c * 5 + y) * 5 + xx + 1];
    auto want = conv2d_reference(shifted, w, Tensor<double>(), 1, 1);
    // Output column 0 is excluded: there the shifted-array oracle sees zero
    // padding while the offset sampler reads real pixels at column 0, so the
    // two computations legitimately differ at that boundary.
    for (int oc = 0; oc < 3; ++oc)
        for (int y = 0; y < 5; ++y)
            for (int xx = 1; xx < 5; ++xx) {
                const std::size_t i = (static_cast<std::size_t>(oc) * 5 + y) * 5 + xx;
                CHECK(std::abs(got.values()[i] - want.values()[i]) < 1e-12);
            }
}

TEST_CASE("deform_conv2d gradients pass grad_check") {
    GradCheckOptions opt;
    opt.eps = 1e-6;
    Rng rng(41);
    auto x = random_tensor(rng, {1, 2, 5, 5});
    auto w = random_tensor(rng, {2, 2, 3, 3});
    auto b = random_tensor(rng, {2});
    Tensor<double> off(Shape{1, 18, 5, 5});
    for (auto& v : off.values()) v = rng.uniform(-1.3, 1.3);
    Tensor<double> mask(Shape{1, 9, 5, 5});
    for (auto& v : mask.values()) v = rng.uniform(0.1, 0.9);

    auto run = [&](const Tensor<double>& xx, const Tensor<double>& oo, const Tensor<double>& mm,
                   const Tensor<double>& ww, const Tensor<double>& bb, Tape<double>& t) {
        return ops::deform_conv2d(t, xx, oo, mm, ww, bb, 1);
    };
    CHECK(grad_check<double>(
              [&](Tape<double>& t, const Tensor<double>& v) { return run(v, off, mask, w, b, t); }, x,
              opt) < 1e-4);
    CHECK(grad_check<double>(
              [&](Tape<double>& t, const Tensor<double>& v) { return run(x, v, mask, w, b, t); }, off,
              opt) < 1e-4);
    CHECK(grad_check<double>(
              [&](Tape<double>& t, const Tensor<double>& v) { return run(x, off, v, w, b, t); }, mask,
              opt) < 1e-4);
    CHECK(grad_check<double>(
              [&](Tape<double>& t, const Tensor<double>& v) { return run(x, off, mask, v, b, t); }, w,
              opt) < 1e-4);
    CHECK(grad_check<double>(
              [&](Tape<double>& t, const Tensor<double>& v) { return run(x, off, mask, w, v, t); }, b,
              opt) < 1e-4);
}

TEST_CASE("resize_bilinear: identity, upsample constants, gradients") {
    Rng rng(47);
    Tape<double> tape;
    auto x = random_tensor(rng, {1, 2, 4, 4});
    auto same = ops::resize_bilinear(tape, x, 4, 4);
    for (std::size_t i = 0; i < x.values().size(); ++i) CHECK(same.values()[i] == x.values()[i]);

    Tensor<double> c(Shape{1, 1, 2, 2}, 3.25);
    auto up = ops::resize_bilinear(tape, c, 8, 8);
    for (double v : up.values()) CHECK(v == doctest::Approx(3.25).epsilon(1e-15));

    GradCheckOptions opt;
    opt.eps = 1e-6;
    CHECK(grad_check<double>(
              [](Tape<double>& t, const Tensor<double>& v) { return ops::resize_bilinear(t, v, 7, 3); },
              x, opt) < 1e-4);
    CHECK(grad_check<double>(
              [](Tape<double>& t, const Tensor<double>& v) { return ops::resize_bilinear(t, v, 2, 2); },
              x, opt) < 1e-4);
}
