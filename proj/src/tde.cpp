#include "tdmi/tde.hpp"

namespace tdmi {

template <typename T>
Tde<T>::Tde(const TdeConfig& cfg, ParamStore<T>& params, Rng& rng) : cfg_(cfg) {
    if (cfg.delta < 1) throw ConfigError("tde: delta must be >= 1");
    bool any = false;
    for (int j = 0; j < 4; ++j) {
        if (!cfg.stages_enabled[static_cast<std::size_t>(j)]) continue;
        if (!any) first_enabled_ = j;
        any = true;
        auto& s = stage_[static_cast<std::size_t>(j)];
        const std::string sj = std::to_string(j + 1);
        const int concat_ch = 2 * cfg.delta * cfg.in_channels[static_cast<std::size_t>(j)];
        s.proj = ConvLayer<T>(params, rng, "tde.intra." + sj + ".proj", cfg.cm, concat_ch, 3);
        for (int k = 0; k < cfg.intra_blocks[static_cast<std::size_t>(j)]; ++k)
            s.blocks.emplace_back(params, rng, "tde.intra." + sj + ".block" + std::to_string(k + 1),
                                  cfg.cm);
        if (cfg.spatial_modulation) {
            for (int k = 0; k < cfg.branch_blocks; ++k) {
                s.offset_blocks.emplace_back(params, rng,
                                             "tde.offset." + sj + ".block" + std::to_string(k + 1),
                                             cfg.cm);
                s.mod_blocks.emplace_back(params, rng,
                                          "tde.mod." + sj + ".block" + std::to_string(k + 1), cfg.cm);
            }
            s.offset_head = ConvLayer<T>(params, rng, "tde.offset." + sj + ".head", 18, cfg.cm, 3);
            s.mod_head = ConvLayer<T>(params, rng, "tde.mod." + sj + ".head", 9, cfg.cm, 3);
            s.deform = ConvLayer<T>(params, rng, "tde.mod." + sj + ".deform", cfg.cm, cfg.cm, 3);
        }
        // 1x1 adapter ahead of the bilinear resize to stage-1 resolution; the
        // leading stage feeds the cascade directly.
        if (cfg.fusion == TdeConfig::Fusion::kProgressive && j != first_enabled_)
            s.align = ConvLayer<T>(params, rng, "tde.fuse.align" + sj, cfg.cm, cfg.cm, 1);
    }
    if (!any) throw ConfigError("tde: at least one stage must be enabled");
    if (cfg.fusion == TdeConfig::Fusion::kProgressive) {
        int k = 0;
        for (int j = 0; j < 4; ++j)
            if (cfg.stages_enabled[static_cast<std::size_t>(j)])
                fuse_convs_.emplace_back(params, rng, "tde.fuse.conv" + std::to_string(++k), cfg.cm,
                                         cfg.cm, 3);
    } else {
        int enabled = 0;
        for (bool e : cfg.stages_enabled) enabled += e ? 1 : 0;
        simple_fuse_ = ConvLayer<T>(params, rng, "tde.fuse.simple", cfg.cm, enabled * cfg.cm, 3);
    }
}

template <typename T>
FeatureDifferenceSet<T> Tde<T>::compute_differences(Tape<T>& tape,
                                                    const std::vector<StageFeatures<T>>& frames) {
    if (frames.size() < 2) throw ShapeError("compute_differences: need at least 2 frames");
    for (std::size_t f = 1; f < frames.size(); ++f)
        for (int j = 0; j < 4; ++j)
            if (frames[f][static_cast<std::size_t>(j)].shape() !=
                frames[0][static_cast<std::size_t>(j)].shape())
                throw ShapeError("compute_differences: frame " + std::to_string(f) + " stage " +
                                 std::to_string(j + 1) + " shape mismatch");
    FeatureDifferenceSet<T> out;
    for (int j = 0; j < 4; ++j)
        for (std::size_t f = 0; f + 1 < frames.size(); ++f)
            out.stages[static_cast<std::size_t>(j)].push_back(
                ops::sub(tape, frames[f + 1][static_cast<std::size_t>(j)],
                         frames[f][static_cast<std::size_t>(j)]));
    return out;
}

template <typename T>
std::array<Tensor<T>, 4> Tde<T>::intra_stage_fuse(Tape<T>& tape,
                                                  const FeatureDifferenceSet<T>& diffs) const {
    std::array<Tensor<T>, 4> out;
    for (int j = 0; j < 4; ++j) {
        if (!cfg_.stages_enabled[static_cast<std::size_t>(j)]) continue;
        const auto& s = stage_[static_cast<std::size_t>(j)];
        const auto& seq = diffs.stages[static_cast<std::size_t>(j)];
        if (static_cast<int>(seq.size()) != 2 * cfg_.delta)
            throw ShapeError("intra_stage_fuse: stage " + std::to_string(j + 1) + " expects " +
                             std::to_string(2 * cfg_.delta) + " differences, got " +
                             std::to_string(seq.size()));
        Tensor<T> x = ops::concat_channels(tape, seq);
        x = act(tape, s.proj.forward(tape, x));
        for (const auto& blk : s.blocks) x = blk.forward(tape, x);
        out[static_cast<std::size_t>(j)] = x;
    }
    return out;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> Tde<T>::modulation_fields(Tape<T>& tape, int stage_j,
                                                          const Tensor<T>& d) const {
    const auto& s = stage_[static_cast<std::size_t>(stage_j - 1)];
    Tensor<T> o = d;
    for (const auto& blk : s.offset_blocks) o = blk.forward(tape, o);
    o = s.offset_head.forward(tape, o);
    Tensor<T> m = d;
    for (const auto& blk : s.mod_blocks) m = blk.forward(tape, m);
    m = ops::sigmoid(tape, s.mod_head.forward(tape, m));
    return {o, m};
}

template <typename T>
Tensor<T> Tde<T>::modulated_deform(Tape<T>& tape, int stage_j, const Tensor<T>& d,
                                   const Tensor<T>& offsets, const Tensor<T>& mask) const {
    const auto& s = stage_[static_cast<std::size_t>(stage_j - 1)];
    return ops::deform_conv2d(tape, d, offsets, mask, s.deform.w, s.deform.b, 1);
}

template <typename T>
std::array<Tensor<T>, 4> Tde<T>::spatial_modulate(Tape<T>& tape,
                                                  const std::array<Tensor<T>, 4>& d) const {
    std::array<Tensor<T>, 4> out;
    for (int j = 0; j < 4; ++j) {
        if (!cfg_.stages_enabled[static_cast<std::size_t>(j)]) continue;
        auto [offsets, mask] = modulation_fields(tape, j + 1, d[static_cast<std::size_t>(j)]);
        out[static_cast<std::size_t>(j)] =
            modulated_deform(tape, j + 1, d[static_cast<std::size_t>(j)], offsets, mask);
    }
    return out;
}

template <typename T>
Tensor<T> Tde<T>::fuse(Tape<T>& tape, const std::array<Tensor<T>, 4>& dbar, int h1, int w1) const {
    std::vector<Tensor<T>> aligned;
    for (int j = 0; j < 4; ++j) {
        if (!cfg_.stages_enabled[static_cast<std::size_t>(j)]) continue;
        Tensor<T> x = dbar[static_cast<std::size_t>(j)];
        if (cfg_.fusion == TdeConfig::Fusion::kProgressive && j != first_enabled_)
            x = stage_[static_cast<std::size_t>(j)].align.forward(tape, x);
        if (x.dim(2) != h1 || x.dim(3) != w1) x = ops::resize_bilinear(tape, x, h1, w1);
        aligned.push_back(x);
    }
    if (cfg_.fusion == TdeConfig::Fusion::kSimple)
        return simple_fuse_.forward(tape, ops::concat_channels(tape, aligned));
    Tensor<T> acc = fuse_convs_[0].forward(tape, aligned[0]);
    for (std::size_t k = 1; k < aligned.size(); ++k)
        acc = fuse_convs_[k].forward(tape, ops::add(tape, acc, aligned[k]));
    return acc;
}

template <typename T>
Tensor<T> Tde<T>::forward(Tape<T>& tape, const std::vector<StageFeatures<T>>& frames) const {
    if (static_cast<int>(frames.size()) != 2 * cfg_.delta + 1)
        throw ShapeError("tde: expected " + std::to_string(2 * cfg_.delta + 1) + " frames, got " +
                         std::to_string(frames.size()));
    const auto diffs = compute_differences(tape, frames);
    auto d = intra_stage_fuse(tape, diffs);
    if (cfg_.spatial_modulation) d = spatial_modulate(tape, d);
    // M lives at stage-1 resolution regardless of which stages are enabled.
    const auto& s1 = frames[0][0];
    return fuse(tape, d, s1.dim(2), s1.dim(3));
}

template class Tde<float>;
template class Tde<double>;

} // namespace tdmi
