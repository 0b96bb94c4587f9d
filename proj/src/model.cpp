#include "tdmi/model.hpp"

namespace tdmi {

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::kTdmi: return "tdmi";
        case Variant::kTdmiSt: return "tdmi_st";
        case Variant::kBackboneOnly: return "backbone_only";
        case Variant::kTdeOnly: return "tde_only";
        case Variant::kNoMiObjective: return "no_mi_objective";
        case Variant::kSimpleFusion: return "simple_fusion";
        case Variant::kNoSpatialModulation: return "no_spatial_modulation";
        case Variant::kSingleStage: return "single_stage";
        case Variant::kChannelSplit: return "channel_split";
    }
    return "?";
}

std::vector<Variant> all_variants() {
    return {Variant::kTdmi,         Variant::kTdmiSt,       Variant::kBackboneOnly,
            Variant::kTdeOnly,      Variant::kNoMiObjective, Variant::kSimpleFusion,
            Variant::kNoSpatialModulation, Variant::kSingleStage,  Variant::kChannelSplit};
}

Variant parse_variant(const std::string& name) {
    for (Variant v : all_variants())
        if (name == variant_name(v)) return v;
    std::string valid;
    for (Variant v : all_variants()) valid += std::string(" ") + variant_name(v);
    throw ConfigError("unknown variant '" + name + "'; valid variants:" + valid);
}

bool variant_uses_tde(Variant v) { return v != Variant::kBackboneOnly; }

bool variant_uses_factorization(Variant v) {
    switch (v) {
        case Variant::kTdmi:
        case Variant::kTdmiSt:
        case Variant::kNoMiObjective:
        case Variant::kChannelSplit: return true;
        default: return false;
    }
}

bool variant_uses_mi(Variant v) {
    switch (v) {
        case Variant::kTdmi:
        case Variant::kTdmiSt:
        case Variant::kChannelSplit: return true;
        default: return false;
    }
}

template <typename T>
TdmiModel<T>::TdmiModel(const ModelConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), backbone_([&] {
          BackboneConfig bc;
          bc.in_channels = 1;
          bc.channels = cfg.channels;
          Rng rng(Rng::stream(seed, "model.backbone"));
          return Backbone<T>(bc, params_, rng);
      }()) {
    Rng rng(Rng::stream(seed, "model.head"));
    if (!variant_uses_tde(cfg.variant)) {
        // Key-frame-only pipeline: project the stage-4 visual feature, lift it
        // to heatmap resolution and decode with the same head capacity the
        // full model gets.
        bb_proj_ = ConvLayer<T>(params_, rng, "head.visual_proj", cfg.cm, cfg.channels[3], 1);
        for (int k = 0; k < 2; ++k)
            bb_blocks_.emplace_back(params_, rng, "head.block" + std::to_string(k + 1), cfg.cm);
        bb_head_ = ConvLayer<T>(params_, rng, "head.out", cfg.joints, cfg.cm, 3);
        return;
    }

    TdeConfig tc;
    tc.cm = cfg.cm;
    tc.delta = cfg.delta;
    tc.in_channels = cfg.channels;
    switch (cfg.variant) {
        case Variant::kSimpleFusion:
            tc.spatial_modulation = false;
            tc.fusion = TdeConfig::Fusion::kSimple;
            break;
        case Variant::kNoSpatialModulation: tc.spatial_modulation = false; break;
        case Variant::kSingleStage:
            tc.spatial_modulation = false;
            tc.stages_enabled = {false, false, false, true};
            break;
        default: break;
    }
    Rng tde_rng(Rng::stream(seed, "model.tde"));
    tde_ = std::make_unique<Tde<T>>(tc, params_, tde_rng);

    RdmConfig rc;
    rc.cm = cfg.cm;
    rc.joints = cfg.joints;
    rc.visual_channels = cfg.channels[3];
    rc.frames = 2 * cfg.delta + 1;
    rc.factorize = variant_uses_factorization(cfg.variant);
    rc.mode = cfg.variant == Variant::kChannelSplit ? RdmConfig::Mode::kChannelSplit
                                                    : RdmConfig::Mode::kAttention;
    rc.stop_grad_mn = cfg.stop_grad_mn;
    rc.spatiotemporal_visual = cfg.variant == Variant::kTdmiSt;
    Rng rdm_rng(Rng::stream(seed, "model.rdm"));
    rdm_ = std::make_unique<Rdm<T>>(rc, params_, rdm_rng);

    if (variant_uses_mi(cfg.variant)) {
        MiFeatureDims dims;
        dims.motion = cfg.cm;
        dims.useful = rdm_->head_motion_channels();
        dims.noisy = rc.mode == RdmConfig::Mode::kChannelSplit ? cfg.cm / 2 : cfg.cm;
        dims.visual = cfg.cm;
        dims.enhanced = cfg.cm;
        dims.label = cfg.label_dim();
        Rng critic_rng(Rng::stream(seed, "critic"));
        mi_ = std::make_unique<MiObjective<T>>(dims, critic_params_, critic_rng, cfg.stop_grad_mn);
    }
}

template <typename T>
typename TdmiModel<T>::Outputs TdmiModel<T>::forward(Tape<T>& tape, const Sample<T>& sample) const {
    Outputs out;
    const int frames = 2 * cfg_.delta + 1;
    if (static_cast<int>(sample.frames.size()) != frames)
        throw ShapeError("model: sample has " + std::to_string(sample.frames.size()) +
                         " frames, expected " + std::to_string(frames));
    const int key = cfg_.delta;

    if (!variant_uses_tde(cfg_.variant)) {
        auto feats = backbone_.forward(tape, sample.frames[static_cast<std::size_t>(key)]);
        const auto& s1 = feats[0];
        Tensor<T> x = act(tape, bb_proj_.forward(tape, feats[3]));
        x = ops::resize_bilinear(tape, x, s1.dim(2), s1.dim(3));
        for (const auto& blk : bb_blocks_) x = blk.forward(tape, x);
        out.heatmaps = bb_head_.forward(tape, x);
        return out;
    }

    std::vector<StageFeatures<T>> frame_feats;
    frame_feats.reserve(static_cast<std::size_t>(frames));
    for (const auto& f : sample.frames) frame_feats.push_back(backbone_.forward(tape, f));

    Tensor<T> m = tde_->forward(tape, frame_feats);

    std::vector<Tensor<T>> stage4s;
    for (const auto& sf : frame_feats) stage4s.push_back(sf[3]);
    Tensor<T> visual = rdm_->visual_feature(tape, stage4s, key, m.dim(2), m.dim(3));

    Tensor<T> motion = m;
    Tensor<T> m_u, m_n;
    if (variant_uses_factorization(cfg_.variant)) {
        auto fact = rdm_->factorize(tape, m);
        m_u = fact.m_u;
        m_n = fact.m_n;
        motion = m_u;
    }
    auto [enhanced, heatmaps] = rdm_->enhance_and_head(tape, motion, visual);
    out.heatmaps = heatmaps;

    if (has_mi()) {
        out.m = ops::global_avg_pool(tape, m);
        out.m_u = ops::global_avg_pool(tape, m_u);
        out.m_n = ops::global_avg_pool(tape, m_n);
        out.f_vis = ops::global_avg_pool(tape, visual);
        out.f_enh = ops::global_avg_pool(tape, enhanced);
    }
    return out;
}

template <typename T>
Archive TdmiModel<T>::to_archive() const {
    Archive a = params_.to_archive();
    for (const auto& [name, entry] : critic_params_.to_archive()) a.emplace(name, entry);
    return a;
}

template <typename T>
void TdmiModel<T>::load_archive(const Archive& a) {
    params_.load_archive(a);
    critic_params_.load_archive(a);
}

template class TdmiModel<float>;
template class TdmiModel<double>;

} // namespace tdmi
