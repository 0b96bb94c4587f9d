#pragma once

#include <vector>

#include "tdmi/blocks.hpp"

namespace tdmi {

template <typename T>
struct FactorizedMotion {
    Tensor<T> m_u, m_n;       // useful / noisy rescalings of M
    Tensor<T> mask_u, mask_n; // [1,Cm] attention vectors (attention mode only)
};

struct RdmConfig {
    int cm = 32;
    int joints = 5;
    int visual_channels = 128; // backbone stage-4 width
    int frames = 5;            // clip length (spatiotemporal fusion input)
    bool factorize = true;     // false: the head consumes M directly
    enum class Mode { kAttention, kChannelSplit } mode = Mode::kAttention;
    bool stop_grad_mn = false; // treat M_n as a frozen contrastive landmark
    bool spatiotemporal_visual = false;
    int enhance_blocks = 2;
};

// Representation Disentanglement Module: channel-attention factorization of
// the motion feature, fusion of the useful part with the key-frame visual
// feature, and the heatmap head. The noisy part M_n never feeds the head; it
// only participates in the mutual-information objective.
template <typename T>
class Rdm {
public:
    Rdm(const RdmConfig& cfg, ParamStore<T>& params, Rng& rng);

    const RdmConfig& config() const { return cfg_; }

    // Number of channels in the motion tensor consumed by the head.
    int head_motion_channels() const;

    FactorizedMotion<T> factorize(Tape<T>& tape, const Tensor<T>& m) const;

    // Projects the stage-4 visual feature (key frame, or the spatiotemporal
    // fusion of all frames) to cm channels at the motion resolution.
    Tensor<T> visual_feature(Tape<T>& tape, const std::vector<Tensor<T>>& stage4_frames, int key_index,
                             int out_h, int out_w) const;

    // Residual fusion of the useful motion and the visual feature into the
    // enhanced representation, plus the 3x3 heatmap head.
    std::pair<Tensor<T>, Tensor<T>> enhance_and_head(Tape<T>& tape, const Tensor<T>& motion,
                                                     const Tensor<T>& visual) const;

private:
    RdmConfig cfg_;
    Linear<T> mlp_u1_, mlp_u2_, mlp_n1_, mlp_n2_;
    ConvLayer<T> st_fuse_;     // spatiotemporal fusion of stage-4 features (1x1)
    ConvLayer<T> visual_proj_; // stage-4 -> cm (1x1)
    ConvLayer<T> enhance_fuse_;
    std::vector<ResidualBlock<T>> enhance_blocks_;
    ConvLayer<T> head_;
};

} // namespace tdmi
