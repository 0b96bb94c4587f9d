#pragma once

#include <array>
#include <vector>

#include "tdmi/backbone.hpp"
#include "tdmi/blocks.hpp"

namespace tdmi {

// Consecutive feature differences: per stage j, the ordered list of the 2*delta
// tensors F[t+1] - F[t] over adjacent frame pairs.
template <typename T>
struct FeatureDifferenceSet {
    std::array<std::vector<Tensor<T>>, 4> stages;
};

struct TdeConfig {
    int cm = 32;                                   // motion feature width
    int delta = 2;                                 // temporal span
    std::array<int, 4> in_channels = {16, 32, 64, 128};
    std::array<int, 4> intra_blocks = {3, 3, 2, 2};
    int branch_blocks = 2;                         // offset/modulation branch depth
    bool spatial_modulation = true;
    enum class Fusion { kProgressive, kSimple } fusion = Fusion::kProgressive;
    std::array<bool, 4> stages_enabled = {true, true, true, true};
};

// Multi-stage Temporal Difference Encoder: difference sequences, intra-stage
// fusion, offset/scalar spatial modulation via modulated deformable
// convolution, and progressive accumulation into the motion feature M at
// stage-1 resolution.
template <typename T>
class Tde {
public:
    Tde(const TdeConfig& cfg, ParamStore<T>& params, Rng& rng);

    const TdeConfig& config() const { return cfg_; }

    // Exact elementwise subtraction of adjacent frames' features, all stages.
    static FeatureDifferenceSet<T> compute_differences(Tape<T>& tape,
                                                       const std::vector<StageFeatures<T>>& frames);

    // Concatenate a stage's differences and aggregate with its residual
    // blocks; output has cm channels at the stage's native resolution.
    // Disabled stages yield undefined tensors.
    std::array<Tensor<T>, 4> intra_stage_fuse(Tape<T>& tape, const FeatureDifferenceSet<T>& diffs) const;

    // Offset / modulation branches plus the modulated deformable convolution.
    std::array<Tensor<T>, 4> spatial_modulate(Tape<T>& tape, const std::array<Tensor<T>, 4>& d) const;

    // Per-stage offset and modulation fields (exposed for inspection/tests).
    std::pair<Tensor<T>, Tensor<T>> modulation_fields(Tape<T>& tape, int stage_j,
                                                      const Tensor<T>& d) const;

    // The stage's deformable convolution under explicit fields.
    Tensor<T> modulated_deform(Tape<T>& tape, int stage_j, const Tensor<T>& d,
                               const Tensor<T>& offsets, const Tensor<T>& mask) const;

    // Align enabled stages to the target (stage-1) resolution and fold them
    // into M.
    Tensor<T> fuse(Tape<T>& tape, const std::array<Tensor<T>, 4>& dbar, int h1, int w1) const;

    // Full pipeline: differences -> intra fusion -> (modulation) -> fusion.
    Tensor<T> forward(Tape<T>& tape, const std::vector<StageFeatures<T>>& frames) const;

private:
    TdeConfig cfg_;
    struct StageNet {
        ConvLayer<T> proj;
        std::vector<ResidualBlock<T>> blocks;
        std::vector<ResidualBlock<T>> offset_blocks;
        ConvLayer<T> offset_head;
        std::vector<ResidualBlock<T>> mod_blocks;
        ConvLayer<T> mod_head;
        ConvLayer<T> deform; // holds the deformable kernel weights
        ConvLayer<T> align;  // 1x1 projection before resolution alignment (stages 2..4)
    };
    std::array<StageNet, 4> stage_;
    std::vector<ConvLayer<T>> fuse_convs_; // progressive accumulation convs
    ConvLayer<T> simple_fuse_;
    int first_enabled_ = 0;
};

} // namespace tdmi
