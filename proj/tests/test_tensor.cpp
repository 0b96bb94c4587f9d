#include <doctest.h>

#include "tdmi/ops.hpp"
#include "tdmi/rng.hpp"
#include "tdmi/tensor.hpp"

using namespace tdmi;

TEST_CASE("tensor construction and invariants") {
    Tensor<double> t(Shape{2, 3}, 1.5);
    CHECK(t.size() == 6);
    CHECK(t.values()[5] == 1.5);
    CHECK_THROWS_AS(Tensor<double>(Shape{2, 2}, std::vector<double>{1.0}), ShapeError);
    CHECK_THROWS_AS(Tensor<double>(Shape{0, 2}), ShapeError);
    CHECK_THROWS_AS(t.item(), ContractError);
}

TEST_CASE("backward: loss = sum(x) gives all-ones gradient") {
    Tape<double> tape;
    Tensor<double> x(Shape{3, 4}, 0.25, true);
    auto loss = ops::sum_all(tape, x);
    tape.backward(loss);
    for (double g : x.grad()) CHECK(g == 1.0);
}

TEST_CASE("backward: loss = sum(x*x)/2 gives gradient x") {
    Tape<double> tape;
    Rng rng(7);
    Tensor<double> x(Shape{5}, 0.0, true);
    for (auto& v : x.values()) v = rng.gaussian();
    auto loss = ops::scale(tape, ops::sum_all(tape, ops::mul(tape, x, x)), 0.5);
    tape.backward(loss);
    for (std::size_t i = 0; i < 5; ++i) CHECK(x.grad()[i] == doctest::Approx(x.values()[i]).epsilon(1e-12));
}

TEST_CASE("backward accumulates gradients at shared subexpressions: y = x + x") {
    Tape<double> tape;
    Tensor<double> x(Shape{3}, 2.0, true);
    auto y = ops::add(tape, x, x);
    auto loss = ops::sum_all(tape, y);
    tape.backward(loss);
    for (double g : x.grad()) CHECK(g == 2.0);
}

TEST_CASE("backward contract errors") {
    Tape<double> tape;
    Tensor<double> x(Shape{2, 2}, 1.0, true);
    auto y = ops::mul(tape, x, x);
    CHECK_THROWS_AS(tape.backward(y), ContractError); // non-scalar loss

    Tape<double> empty;
    Tensor<double> s(Shape{1}, 1.0, true);
    CHECK_THROWS_AS(empty.backward(s), ContractError); // empty tape
}

TEST_CASE("checked mode rejects non-finite forward values") {
    set_checked_mode(true);
    Tape<double> tape;
    Tensor<double> x(Shape{2}, 0.0, true);
    x.values()[0] = 800.0; // exp overflows to inf
    CHECK_THROWS_AS(ops::exp(tape, x), NumericError);
    set_checked_mode(false);
}

TEST_CASE("checked mode rejects non-finite backward values") {
    set_checked_mode(true);
    Tape<double> tape;
    Tensor<double> x(Shape{2}, 0.0, true); // log'(0) = inf
    auto y = ops::log(tape, ops::add_scalar(tape, x, 1e-320));
    auto loss = ops::sum_all(tape, y);
    CHECK_THROWS_AS(tape.backward(loss), NumericError);
    set_checked_mode(false);
}

TEST_CASE("inference tape records nothing") {
    Tape<double> tape(false);
    Tensor<double> x(Shape{4}, 1.0, true);
    auto y = ops::sigmoid(tape, x);
    CHECK(y.values()[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
    CHECK(tape.size() == 0);
}

TEST_CASE("rng streams are deterministic and tag-separated") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    CHECK(Rng::stream(1, "data") != Rng::stream(1, "model"));
    CHECK(Rng::stream(1, "data") == Rng::stream(1, "data"));
}
