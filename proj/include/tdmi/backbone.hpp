#pragma once

#include <array>
#include <vector>

#include "tdmi/blocks.hpp"

namespace tdmi {

// Per-frame multi-stage features: stage j has channels[j] channels at
// 1/2^(j+2) of the input resolution (stage 1 = input/4).
template <typename T>
using StageFeatures = std::array<Tensor<T>, 4>;

struct BackboneConfig {
    int in_channels = 1;
    std::array<int, 4> channels = {16, 32, 64, 128};
};

// Small 4-stage convolutional pyramid. Each stage is a stride-2 transition
// convolution followed by one residual block; stage 1 downsamples twice so
// its features live at 1/4 resolution. All frames of a clip share these
// weights.
template <typename T>
class Backbone {
public:
    Backbone(const BackboneConfig& cfg, ParamStore<T>& params, Rng& rng);

    // frame: [1, in_channels, H, W]; H and W must be divisible by 16.
    StageFeatures<T> forward(Tape<T>& tape, const Tensor<T>& frame) const;

    static Shape stage_shape(const BackboneConfig& cfg, int input_h, int input_w, int stage_j);

private:
    BackboneConfig cfg_;
    ConvLayer<T> stem_;
    std::array<ConvLayer<T>, 4> down_;
    std::array<ResidualBlock<T>, 4> block_;
};

} // namespace tdmi
