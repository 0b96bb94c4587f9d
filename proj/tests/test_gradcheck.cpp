#include <doctest.h>

#include "tdmi/gradcheck.hpp"
#include "tdmi/ops.hpp"
#include "tdmi/rng.hpp"

using namespace tdmi;

TEST_CASE("grad_check: identity has ~zero error") {
    Tensor<double> x(Shape{4}, std::vector<double>{0.3, -1.2, 2.0, 0.01});
    const double err = grad_check<double>(
        [](Tape<double>&, const Tensor<double>& v) { return v; }, x, {.eps = 1e-5});
    CHECK(err < 1e-8);
}

TEST_CASE("grad_check: sigmoid at 0 has derivative 0.25") {
    Tensor<double> x(Shape{1}, std::vector<double>{0.0});
    double analytic = 0.0;
    {
        Tape<double> tape;
        Tensor<double> t = x.clone();
        t.set_requires_grad(true);
        auto loss = ops::sum_all(tape, ops::sigmoid(tape, t));
        tape.backward(loss);
        analytic = t.grad()[0];
    }
    CHECK(analytic == doctest::Approx(0.25).epsilon(1e-12));
    const double err = grad_check<double>(
        [](Tape<double>& t, const Tensor<double>& v) { return ops::sigmoid(t, v); }, x, {.eps = 1e-5});
    CHECK(err < 1e-6);
}

TEST_CASE("grad_check rejects eps outside [1e-7, 1e-3]") {
    Tensor<double> x(Shape{2}, 1.0);
    auto id = [](Tape<double>&, const Tensor<double>& v) { return v; };
    CHECK_THROWS_AS(grad_check<double>(id, x, {.eps = 1e-8}), ContractError);
    CHECK_THROWS_AS(grad_check<double>(id, x, {.eps = 1e-2}), ContractError);
}

TEST_CASE("grad_check detects a non-deterministic function") {
    Tensor<double> x(Shape{2}, 1.0);
    int calls = 0;
    auto f = [&calls](Tape<double>& t, const Tensor<double>& v) {
        return ops::scale(t, v, 1.0 + 1e-9 * (calls++));
    };
    CHECK_THROWS_AS(grad_check<double>(f, x, {.eps = 1e-5}), DeterminismError);
}

TEST_CASE("grad_check component subsampling is deterministic") {
    Rng rng(17);
    Tensor<double> x(Shape{20}, 0.0);
    for (auto& v : x.values()) v = rng.gaussian();
    auto f = [](Tape<double>& t, const Tensor<double>& v) { return ops::mul(t, v, v); };
    const double a = grad_check<double>(f, x, {.eps = 1e-5, .max_components = 5, .seed = 3});
    const double b = grad_check<double>(f, x, {.eps = 1e-5, .max_components = 5, .seed = 3});
    CHECK(a == b);
    CHECK(a < 1e-6);
}
