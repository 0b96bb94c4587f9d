#pragma once

#include <memory>
#include <optional>
#include <string>

#include "tdmi/backbone.hpp"
#include "tdmi/mi.hpp"
#include "tdmi/rdm.hpp"
#include "tdmi/synthdata.hpp"
#include "tdmi/tde.hpp"

namespace tdmi {

// Exactly one variant is active per run. `kTdmi` is the full model; the
// rest are the ablation axes of the component / TDE-design / RDM-design
// studies plus the spatiotemporal variant.
enum class Variant {
    kTdmi,
    kTdmiSt,
    kBackboneOnly,
    kTdeOnly,
    kNoMiObjective,
    kSimpleFusion,
    kNoSpatialModulation,
    kSingleStage,
    kChannelSplit,
};

const char* variant_name(Variant v);
Variant parse_variant(const std::string& name); // ConfigError lists valid names
std::vector<Variant> all_variants();

bool variant_uses_tde(Variant v);
bool variant_uses_factorization(Variant v);
bool variant_uses_mi(Variant v);

struct ModelConfig {
    int image_size = 64;
    int joints = 5;
    int delta = 2;
    std::array<int, 4> channels = {16, 32, 64, 128};
    int cm = 32;
    Variant variant = Variant::kTdmi;
    bool stop_grad_mn = false;
    int critic_hidden = 64;
    int critic_embed = 16;

    int heatmap_size() const { return image_size / 4; }
    int label_dim() const { return joints * heatmap_size() * heatmap_size(); }
};

// The complete network for one variant: backbone (+ TDE + RDM as the variant
// dictates) plus, when the MI objective is active, the six estimator critics.
template <typename T>
class TdmiModel {
public:
    TdmiModel(const ModelConfig& cfg, std::uint64_t seed);

    struct Outputs {
        Tensor<T> heatmaps; // [1,J,S/4,S/4]
        // GAP-reduced descriptor rows [1,d]; defined when the MI objective is
        // active for this variant.
        Tensor<T> m, m_u, m_n, f_vis, f_enh;
    };

    Outputs forward(Tape<T>& tape, const Sample<T>& sample) const;

    const ModelConfig& config() const { return cfg_; }
    ParamStore<T>& params() { return params_; }
    const ParamStore<T>& params() const { return params_; }
    ParamStore<T>& critic_params() { return critic_params_; }
    bool has_mi() const { return static_cast<bool>(mi_); }
    const MiObjective<T>& mi() const { return *mi_; }
    const Tde<T>& tde() const { return *tde_; }
    const Rdm<T>& rdm() const { return *rdm_; }
    const Backbone<T>& backbone() const { return backbone_; }

    // Checkpoint payload: model parameters plus critic parameters.
    Archive to_archive() const;
    void load_archive(const Archive& a);

private:
    ModelConfig cfg_;
    ParamStore<T> params_;
    ParamStore<T> critic_params_;
    Backbone<T> backbone_;
    std::unique_ptr<Tde<T>> tde_;
    std::unique_ptr<Rdm<T>> rdm_;
    std::unique_ptr<MiObjective<T>> mi_;
    // backbone_only head path
    ConvLayer<T> bb_proj_;
    std::vector<ResidualBlock<T>> bb_blocks_;
    ConvLayer<T> bb_head_;
};

} // namespace tdmi
