#include "tdmi/backbone.hpp"

namespace tdmi {

template <typename T>
Backbone<T>::Backbone(const BackboneConfig& cfg, ParamStore<T>& params, Rng& rng) : cfg_(cfg) {
    stem_ = ConvLayer<T>(params, rng, "backbone.stage1.stem", cfg.channels[0], cfg.in_channels, 3, 2);
    int prev = cfg.channels[0];
    for (int j = 0; j < 4; ++j) {
        const std::string base = "backbone.stage" + std::to_string(j + 1);
        down_[j] = ConvLayer<T>(params, rng, base + ".down", cfg.channels[j], prev, 3, 2);
        block_[j] = ResidualBlock<T>(params, rng, base + ".block", cfg.channels[j]);
        prev = cfg.channels[j];
    }
}

template <typename T>
StageFeatures<T> Backbone<T>::forward(Tape<T>& tape, const Tensor<T>& frame) const {
    if (frame.rank() != 4 || frame.dim(1) != cfg_.in_channels)
        throw ShapeError("backbone: frame must be [1," + std::to_string(cfg_.in_channels) +
                         ",H,W], got " + shape_str(frame.shape()));
    if (frame.dim(2) % 16 != 0 || frame.dim(3) % 16 != 0)
        throw ShapeError("backbone: input size " + shape_str(frame.shape()) +
                         " is not divisible by 16");
    StageFeatures<T> out;
    Tensor<T> x = act(tape, stem_.forward(tape, frame)); // 1/2 resolution
    for (int j = 0; j < 4; ++j) {
        x = act(tape, down_[j].forward(tape, x));
        x = block_[j].forward(tape, x);
        out[static_cast<std::size_t>(j)] = x;
    }
    return out;
}

template <typename T>
Shape Backbone<T>::stage_shape(const BackboneConfig& cfg, int input_h, int input_w, int stage_j) {
    // Stride-2 convolutions with pad 1 and kernel 3 halve via ceil(n/2);
    // stage j sits behind j+1 halvings.
    int h = input_h, w = input_w;
    for (int k = 0; k < stage_j + 1; ++k) {
        h = (h + 1) / 2;
        w = (w + 1) / 2;
    }
    return Shape{1, cfg.channels[static_cast<std::size_t>(stage_j - 1)], h, w};
}

template class Backbone<float>;
template class Backbone<double>;

} // namespace tdmi
