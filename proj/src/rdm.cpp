#include "tdmi/rdm.hpp"

namespace tdmi {

template <typename T>
Rdm<T>::Rdm(const RdmConfig& cfg, ParamStore<T>& params, Rng& rng) : cfg_(cfg) {
    if (cfg.joints < 1) throw ConfigError("rdm: joint count must be >= 1");
    if (cfg.factorize && cfg.mode == RdmConfig::Mode::kChannelSplit && cfg.cm % 2 != 0)
        throw ConfigError("rdm: channel splitting requires an even cm");
    if (cfg.factorize && cfg.mode == RdmConfig::Mode::kAttention) {
        mlp_u1_ = Linear<T>(params, rng, "rdm.mlp_u.fc1", cfg.cm, cfg.cm);
        mlp_u2_ = Linear<T>(params, rng, "rdm.mlp_u.fc2", cfg.cm, cfg.cm);
        mlp_n1_ = Linear<T>(params, rng, "rdm.mlp_n.fc1", cfg.cm, cfg.cm);
        mlp_n2_ = Linear<T>(params, rng, "rdm.mlp_n.fc2", cfg.cm, cfg.cm);
    }
    if (cfg.spatiotemporal_visual)
        st_fuse_ = ConvLayer<T>(params, rng, "rdm.st_fuse", cfg.visual_channels,
                                cfg.frames * cfg.visual_channels, 1);
    visual_proj_ = ConvLayer<T>(params, rng, "rdm.enhance.visual_proj", cfg.cm, cfg.visual_channels, 1);
    enhance_fuse_ = ConvLayer<T>(params, rng, "rdm.enhance.fuse", cfg.cm,
                                 head_motion_channels() + cfg.cm, 3);
    for (int k = 0; k < cfg.enhance_blocks; ++k)
        enhance_blocks_.emplace_back(params, rng, "rdm.enhance.block" + std::to_string(k + 1), cfg.cm);
    head_ = ConvLayer<T>(params, rng, "rdm.head", cfg.joints, cfg.cm, 3);
}

template <typename T>
int Rdm<T>::head_motion_channels() const {
    if (cfg_.factorize && cfg_.mode == RdmConfig::Mode::kChannelSplit) return cfg_.cm / 2;
    return cfg_.cm;
}

template <typename T>
FactorizedMotion<T> Rdm<T>::factorize(Tape<T>& tape, const Tensor<T>& m) const {
    if (!cfg_.factorize) throw ContractError("rdm: factorization is disabled in this configuration");
    FactorizedMotion<T> out;
    if (cfg_.mode == RdmConfig::Mode::kChannelSplit) {
        const int half = cfg_.cm / 2;
        out.m_u = ops::slice_channels(tape, m, 0, half);
        out.m_n = ops::slice_channels(tape, m, half, cfg_.cm);
        return out;
    }
    Tensor<T> descriptor = ops::global_avg_pool(tape, m); // [1,Cm]
    Tensor<T> hu = act(tape, mlp_u1_.forward(tape, descriptor));
    out.mask_u = ops::sigmoid(tape, mlp_u2_.forward(tape, hu));
    Tensor<T> hn = act(tape, mlp_n1_.forward(tape, descriptor));
    out.mask_n = ops::sigmoid(tape, mlp_n2_.forward(tape, hn));
    out.m_u = ops::channel_scale(tape, m, out.mask_u);
    out.m_n = ops::channel_scale(tape, m, out.mask_n);
    return out;
}

template <typename T>
Tensor<T> Rdm<T>::visual_feature(Tape<T>& tape, const std::vector<Tensor<T>>& stage4_frames,
                                 int key_index, int out_h, int out_w) const {
    Tensor<T> visual;
    if (cfg_.spatiotemporal_visual) {
        if (static_cast<int>(stage4_frames.size()) != cfg_.frames)
            throw ShapeError("rdm: spatiotemporal fusion expects " + std::to_string(cfg_.frames) +
                             " frames, got " + std::to_string(stage4_frames.size()));
        visual = st_fuse_.forward(tape, ops::concat_channels(tape, stage4_frames));
    } else {
        visual = stage4_frames[static_cast<std::size_t>(key_index)];
    }
    Tensor<T> projected = act(tape, visual_proj_.forward(tape, visual));
    return ops::resize_bilinear(tape, projected, out_h, out_w);
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> Rdm<T>::enhance_and_head(Tape<T>& tape, const Tensor<T>& motion,
                                                         const Tensor<T>& visual) const {
    if (motion.dim(1) != head_motion_channels())
        throw ShapeError("rdm: head expects motion with " + std::to_string(head_motion_channels()) +
                         " channels, got " + shape_str(motion.shape()));
    if (visual.dim(2) != motion.dim(2) || visual.dim(3) != motion.dim(3))
        throw ShapeError("rdm: visual feature resolution " + shape_str(visual.shape()) +
                         " does not match motion " + shape_str(motion.shape()));
    Tensor<T> x = ops::concat_channels(tape, {motion, visual});
    x = act(tape, enhance_fuse_.forward(tape, x));
    for (const auto& blk : enhance_blocks_) x = blk.forward(tape, x);
    Tensor<T> heatmaps = head_.forward(tape, x);
    return {x, heatmaps};
}

template class Rdm<float>;
template class Rdm<double>;

} // namespace tdmi
