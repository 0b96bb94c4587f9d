#pragma once

#include <string>

#include "tdmi/ops.hpp"
#include "tdmi/params.hpp"

namespace tdmi {

// The one fixed piecewise-linear activation used throughout the network:
// leaky ReLU with slope 0.1.
inline constexpr double kLeakySlope = 0.1;

template <typename T>
Tensor<T> act(Tape<T>& tape, const Tensor<T>& x) {
    return ops::leaky_relu(tape, x, static_cast<T>(kLeakySlope));
}

template <typename T>
struct ConvLayer {
    Tensor<T> w, b;
    ops::Conv2dSpec spec;

    ConvLayer() = default;
    ConvLayer(ParamStore<T>& params, Rng& rng, const std::string& name, int co, int ci, int k,
              int stride = 1, int pad = -1) {
        spec.stride = stride;
        spec.pad = pad < 0 ? k / 2 : pad;
        w = params.add(name + ".w", init_conv_weight<T>(rng, co, ci, k, k));
        b = params.add(name + ".b", Tensor<T>(Shape{co}));
    }

    Tensor<T> forward(Tape<T>& tape, const Tensor<T>& x) const { return ops::conv2d(tape, x, w, b, spec); }
};

// Two 3x3 convolutions with an identity skip: y = act(x + conv2(act(conv1(x)))).
template <typename T>
struct ResidualBlock {
    ConvLayer<T> c1, c2;

    ResidualBlock() = default;
    ResidualBlock(ParamStore<T>& params, Rng& rng, const std::string& name, int ch)
        : c1(params, rng, name + ".conv1", ch, ch, 3), c2(params, rng, name + ".conv2", ch, ch, 3) {}

    Tensor<T> forward(Tape<T>& tape, const Tensor<T>& x) const {
        Tensor<T> y = act(tape, c1.forward(tape, x));
        y = c2.forward(tape, y);
        return act(tape, ops::add(tape, y, x));
    }
};

template <typename T>
struct Linear {
    Tensor<T> w, b;

    Linear() = default;
    Linear(ParamStore<T>& params, Rng& rng, const std::string& name, int in, int out) {
        w = params.add(name + ".w", init_linear_weight<T>(rng, in, out));
        b = params.add(name + ".b", Tensor<T>(Shape{out}));
    }

    Tensor<T> forward(Tape<T>& tape, const Tensor<T>& x) const {
        return ops::add_rowvec(tape, ops::matmul(tape, x, w), b);
    }
};

} // namespace tdmi
