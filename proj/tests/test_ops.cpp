#include <doctest.h>

#include <cmath>

#include "tdmi/gradcheck.hpp"
#include "tdmi/ops.hpp"
#include "tdmi/rng.hpp"

using namespace tdmi;

namespace {

Tensor<double> random_tensor(Rng& rng, Shape shape, bool requires_grad = false) {
    Tensor<double> t(std::move(shape), 0.0, requires_grad);
    for (auto& v : t.values()) v = rng.gaussian();
    return t;
}

} // namespace

TEST_CASE("global_avg_pool pinned values and loop oracle") {
    Tape<double> tape;
    Tensor<double> c7(Shape{1, 3, 4, 4}, 7.0);
    auto p = ops::global_avg_pool(tape, c7);
    for (double v : p.values()) CHECK(v == doctest::Approx(7.0).epsilon(1e-15));

    Tensor<double> m(Shape{1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4});
    CHECK(ops::global_avg_pool(tape, m).values()[0] == doctest::Approx(2.5).epsilon(1e-15));

    // random map vs loop-mean oracle
    Rng rng(11);
    auto x = random_tensor(rng, {2, 3, 5, 7});
    auto gp = ops::global_avg_pool(tape, x);
    for (int n = 0; n < 2; ++n)
        for (int c = 0; c < 3; ++c) {
            double acc = 0;
            for (int y = 0; y < 5; ++y)
                for (int xx = 0; xx < 7; ++xx) acc += x.values()[((n * 3 + c) * 5 + y) * 7 + xx];
            CHECK(std::abs(gp.values()[n * 3 + c] - acc / 35.0) < 1e-12);
        }
}

TEST_CASE("elementwise primitives pass grad_check at 5 random inputs") {
    GradCheckOptions opt;
    opt.eps = 1e-6;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Rng rng(seed);
        auto x = random_tensor(rng, {3, 4});
        auto y = random_tensor(rng, {3, 4});

        using Fn = std::function<Tensor<double>(Tape<double>&, const Tensor<double>&)>;
        const std::pair<const char*, Fn> unary_cases[] = {
            {"sigmoid", [](Tape<double>& t, const Tensor<double>& v) { return ops::sigmoid(t, v); }},
            {"leaky_relu",
             [](Tape<double>& t, const Tensor<double>& v) { return ops::leaky_relu(t, v, 0.1); }},
            {"exp", [](Tape<double>& t, const Tensor<double>& v) { return ops::exp(t, v); }},
            {"softplus", [](Tape<double>& t, const Tensor<double>& v) { return ops::softplus(t, v); }},
            {"neg", [](Tape<double>& t, const Tensor<double>& v) { return ops::neg(t, v); }},
            {"scale", [](Tape<double>& t, const Tensor<double>& v) { return ops::scale(t, v, -2.5); }},
            {"sum_rows", [](Tape<double>& t, const Tensor<double>& v) { return ops::sum_rows(t, v); }},
            {"gap",
             [](Tape<double>& t, const Tensor<double>& v) {
                 return ops::global_avg_pool(t, ops::reshape(t, v, {1, 2, 2, 3}));
             }},
        };
        for (const auto& [name, fn] : unary_cases) {
            INFO("op = " << name << " seed = " << seed);
            CHECK(grad_check<double>(fn, x, opt) < 1e-4);
        }

        const std::pair<const char*, Fn> binary_cases[] = {
            {"add", [y](Tape<double>& t, const Tensor<double>& v) { return ops::add(t, v, y); }},
            {"sub", [y](Tape<double>& t, const Tensor<double>& v) { return ops::sub(t, y, v); }},
            {"mul", [y](Tape<double>& t, const Tensor<double>& v) { return ops::mul(t, v, y); }},
        };
        for (const auto& [name, fn] : binary_cases) {
            INFO("op = " << name << " seed = " << seed);
            CHECK(grad_check<double>(fn, x, opt) < 1e-4);
        }

        // log needs positive input
        auto xp = x.clone();
        for (auto& v : xp.values()) v = std::abs(v) + 0.5;
        CHECK(grad_check<double>(
                  [](Tape<double>& t, const Tensor<double>& v) { return ops::log(t, v); }, xp, opt) < 1e-4);
    }
}

TEST_CASE("matmul family matches Eigen-free oracle and grad_check") {
    Rng rng(3);
    Tape<double> tape;
    auto a = random_tensor(rng, {3, 5});
    auto b = random_tensor(rng, {5, 4});
    auto c = ops::matmul(tape, a, b);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) {
            double acc = 0;
            for (int k = 0; k < 5; ++k) acc += a.values()[i * 5 + k] * b.values()[k * 4 + j];
            CHECK(std::abs(c.values()[i * 4 + j] - acc) < 1e-12);
        }

    GradCheckOptions opt;
    opt.eps = 1e-6;
    auto bt = random_tensor(rng, {4, 5});
    CHECK(grad_check<double>(
              [b](Tape<double>& t, const Tensor<double>& v) { return ops::matmul(t, v, b); }, a, opt) < 1e-4);
    CHECK(grad_check<double>(
              [a](Tape<double>& t, const Tensor<double>& v) { return ops::matmul(t, a, v); }, b, opt) < 1e-4);
    CHECK(grad_check<double>(
              [bt](Tape<double>& t, const Tensor<double>& v) { return ops::matmul_bt(t, v, bt); }, a,
              opt) < 1e-4);
    CHECK(grad_check<double>(
              [a](Tape<double>& t, const Tensor<double>& v) { return ops::matmul_bt(t, a, v); }, bt,
              opt) < 1e-4);

    auto v = random_tensor(rng, {5});
    CHECK(grad_check<double>(
              [v](Tape<double>& t, const Tensor<double>& x) { return ops::add_rowvec(t, x, v); }, a,
              opt) < 1e-4);
    auto a2 = random_tensor(rng, {3, 5});
    CHECK(grad_check<double>(
              [a2](Tape<double>& t, const Tensor<double>& x) { return ops::add_rowvec(t, a2, x); }, v,
              opt) < 1e-4);
}

TEST_CASE("logsumexp and diag_mean") {
    Rng rng(5);
    Tape<double> tape;
    auto s = random_tensor(rng, {4, 4});
    auto lse = ops::rowwise_logsumexp(tape, s);
    for (int i = 0; i < 4; ++i) {
        double acc = 0;
        for (int j = 0; j < 4; ++j) acc += std::exp(s.values()[i * 4 + j]);
        CHECK(lse.values()[i] == doctest::Approx(std::log(acc)).epsilon(1e-12));
    }
    auto dm = ops::diag_mean(tape, s);
    CHECK(dm.values()[0] ==
          doctest::Approx((s.values()[0] + s.values()[5] + s.values()[10] + s.values()[15]) / 4.0));

    GradCheckOptions opt;
    opt.eps = 1e-6;
    CHECK(grad_check<double>(
              [](Tape<double>& t, const Tensor<double>& v) { return ops::rowwise_logsumexp(t, v); }, s,
              opt) < 1e-4);
    CHECK(grad_check<double>(
              [](Tape<double>& t, const Tensor<double>& v) { return ops::diag_mean(t, v); }, s, opt) < 1e-4);
}

TEST_CASE("shape ops: concat/slice round trips and gradients") {
    Rng rng(9);
    GradCheckOptions opt;
    opt.eps = 1e-6;

    auto x = random_tensor(rng, {2, 3, 2, 2});
    auto y = random_tensor(rng, {2, 2, 2, 2});
    CHECK(grad_check<double>(
              [y](Tape<double>& t, const Tensor<double>& v) {
                  auto c = ops::concat_channels(t, {v, y});
                  return ops::slice_channels(t, c, 1, 4);
              },
              x, opt) < 1e-4);

    auto r = random_tensor(rng, {3, 4});
    auto r2 = random_tensor(rng, {2, 4});
    CHECK(grad_check<double>(
              [r2](Tape<double>& t, const Tensor<double>& v) {
                  auto c = ops::concat_rows(t, {v, r2});
                  return ops::slice_rows(t, c, 1, 5);
              },
              r, opt) < 1e-4);

    Tape<double> tape;
    auto c = ops::concat_channels(tape, {x, y});
    CHECK(c.shape() == Shape{2, 5, 2, 2});
    auto back = ops::slice_channels(tape, c, 0, 3);
    for (std::size_t i = 0; i < x.values().size(); ++i) CHECK(back.values()[i] == x.values()[i]);
}

TEST_CASE("channel_scale forward and gradients") {
    Rng rng(13);
    Tape<double> tape;
    auto x = random_tensor(rng, {2, 3, 2, 2});
    auto s = random_tensor(rng, {2, 3});
    auto o = ops::channel_scale(tape, x, s);
    for (int n = 0; n < 2; ++n)
        for (int c = 0; c < 3; ++c)
            for (int k = 0; k < 4; ++k)
                CHECK(o.values()[(n * 3 + c) * 4 + k] ==
                      doctest::Approx(x.values()[(n * 3 + c) * 4 + k] * s.values()[n * 3 + c]));

    GradCheckOptions opt;
    opt.eps = 1e-6;
    CHECK(grad_check<double>(
              [s](Tape<double>& t, const Tensor<double>& v) { return ops::channel_scale(t, v, s); }, x,
              opt) < 1e-4);
    CHECK(grad_check<double>(
              [x](Tape<double>& t, const Tensor<double>& v) { return ops::channel_scale(t, x, v); }, s,
              opt) < 1e-4);
}
