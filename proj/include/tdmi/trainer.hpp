#pragma once

#include <functional>
#include <string>

#include "tdmi/model.hpp"
#include "tdmi/optim.hpp"

namespace tdmi {

struct TrainConfig {
    // data
    int joints = 5;
    int delta = 2;
    int image_size = 64;
    int n_distractors = 3;
    double occlusion_prob = 0.5;
    double blur_prob = 0.3;
    double v_max = 2.0;
    double heatmap_sigma = 2.0;
    int train_clips = 200;
    int eval_clips = 50;
    // model
    std::array<int, 4> channels = {16, 32, 64, 128};
    int cm = 32;
    Variant variant = Variant::kTdmi;
    bool stop_grad_mn = false;
    int critic_hidden = 64;
    int critic_embed = 16;
    // optimization
    double alpha = 1.0;
    double lr = 1e-3;
    int iterations = 2000;
    int batch_size = 8;
    int critic_steps = 1;
    double critic_lr = 1e-3;
    std::uint64_t seed = 1;
    int eval_interval = 0; // 0: evaluate only at the end

    ClipConfig clip_config() const;
    ModelConfig model_config() const;
    void validate() const;
};

struct MetricsReport {
    std::string variant;
    std::uint64_t seed = 0;
    std::int64_t iterations = 0;
    std::vector<double> pck05, pck10; // per joint; -1 when a joint was never visible
    double mean_pck05 = 0, mean_pck10 = 0;
    double initial_loss_h = 0, final_loss_h = 0;
    std::vector<double> loss_h_curve;
    double wall_seconds = 0;

    std::string to_json() const; // one line, no trailing newline
};

// Streamed metric records (one JSON line per evaluation).
using MetricsSink = std::function<void(const std::string& json_line)>;

// Masked heatmap loss: mean squared error over the visible joints' maps.
template <typename T>
Tensor<T> heatmap_loss(Tape<T>& tape, const Tensor<T>& predicted, const Sample<T>& sample);

// L_total = L_H + alpha * L_MI.
template <typename T>
Tensor<T> total_loss(Tape<T>& tape, const Tensor<T>& loss_h, const Tensor<T>& loss_mi, T alpha);

template <typename T>
struct TrainResult {
    MetricsReport metrics;
    Archive checkpoint; // parameters + critic parameters + optimizer moments
    std::int64_t iteration = 0;
    std::int64_t adam_step = 0, critic_adam_step = 0;
};

// Trains on the given clip set (deterministic given config.seed) and
// evaluates on eval_set at the end (and every eval_interval if set).
template <typename T>
TrainResult<T> train(const TrainConfig& cfg, const std::vector<Sample<T>>& train_set,
                     const std::vector<Sample<T>>& eval_set, const MetricsSink& sink = {});

// Convenience: builds both datasets from the config seed.
template <typename T>
TrainResult<T> train(const TrainConfig& cfg, const MetricsSink& sink = {});

template <typename T>
MetricsReport evaluate(TdmiModel<T>& model, const std::vector<Sample<T>>& eval_set);

// Dataset seeds: evaluation clips come from a disjoint stream.
std::uint64_t train_data_seed(std::uint64_t seed);
std::uint64_t eval_data_seed(std::uint64_t seed);

// Checkpoint helpers: the archive carries parameters, critic parameters and
// Adam moments; iteration and step counters and the config hash travel in a
// small JSON metadata file next to the archive.
template <typename T>
Archive build_checkpoint(const TdmiModel<T>& model, const Adam<T>& main_adam,
                         const Adam<T>& critic_adam);
template <typename T>
void restore_checkpoint(const Archive& a, TdmiModel<T>& model, Adam<T>* main_adam,
                        Adam<T>* critic_adam);

} // namespace tdmi
