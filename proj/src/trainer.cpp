#include "tdmi/trainer.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace tdmi {

ClipConfig TrainConfig::clip_config() const {
    ClipConfig c;
    c.joints = joints;
    c.delta = delta;
    c.image_size = image_size;
    c.n_distractors = n_distractors;
    c.occlusion_prob = occlusion_prob;
    c.blur_prob = blur_prob;
    c.v_max = v_max;
    c.heatmap_sigma = heatmap_sigma;
    return c;
}

ModelConfig TrainConfig::model_config() const {
    ModelConfig m;
    m.image_size = image_size;
    m.joints = joints;
    m.delta = delta;
    m.channels = channels;
    m.cm = cm;
    m.variant = variant;
    m.stop_grad_mn = stop_grad_mn;
    m.critic_hidden = critic_hidden;
    m.critic_embed = critic_embed;
    return m;
}

void TrainConfig::validate() const {
    if (alpha < 0) throw ConfigError("config: alpha must be >= 0");
    if (joints < 1) throw ConfigError("config: joints must be >= 1");
    if (delta < 1) throw ConfigError("config: delta must be >= 1");
    if (image_size < 16 || image_size % 16 != 0)
        throw ConfigError("config: image_size must be a positive multiple of 16");
    if (iterations < 1 || batch_size < 1) throw ConfigError("config: iterations and batch_size must be >= 1");
    if (train_clips < 1) throw ConfigError("config: train_clips must be >= 1");
    if (cm < 2 || cm % 2 != 0) throw ConfigError("config: cm must be a positive even number");
    if (lr <= 0 || critic_lr <= 0) throw ConfigError("config: learning rates must be positive");
}

std::uint64_t train_data_seed(std::uint64_t seed) { return Rng::stream(seed, "data.train"); }
std::uint64_t eval_data_seed(std::uint64_t seed) { return Rng::stream(seed, "data.eval"); }

std::string MetricsReport::to_json() const {
    nlohmann::json j;
    j["variant"] = variant;
    j["seed"] = seed;
    j["iteration"] = iterations;
    j["pck"]["0.05"] = pck05;
    j["pck"]["0.10"] = pck10;
    j["mean_pck"]["0.05"] = mean_pck05;
    j["mean_pck"]["0.10"] = mean_pck10;
    j["loss_h"]["initial"] = initial_loss_h;
    j["loss_h"]["final"] = final_loss_h;
    j["wall_seconds"] = wall_seconds;
    return j.dump();
}

template <typename T>
Tensor<T> heatmap_loss(Tape<T>& tape, const Tensor<T>& predicted, const Sample<T>& sample) {
    if (predicted.shape() != sample.heatmaps.shape())
        throw ShapeError("heatmap_loss: prediction " + shape_str(predicted.shape()) +
                         " vs target " + shape_str(sample.heatmaps.shape()));
    Tensor<T> diff = ops::sub(tape, predicted, sample.heatmaps);
    Tensor<T> sq = ops::mul(tape, diff, diff);
    Tensor<T> masked = ops::mul(tape, sq, sample.vis_mask);
    const T norm = T(1) / static_cast<T>(std::max(1, sample.visible_pixels));
    return ops::scale(tape, ops::sum_all(tape, masked), norm);
}

template <typename T>
Tensor<T> total_loss(Tape<T>& tape, const Tensor<T>& loss_h, const Tensor<T>& loss_mi, T alpha) {
    return ops::add(tape, loss_h, ops::scale(tape, loss_mi, alpha));
}

namespace {

template <typename T>
Tensor<T> flatten_labels(Tape<T>& tape, const std::vector<const Sample<T>*>& batch) {
    std::vector<Tensor<T>> rows;
    rows.reserve(batch.size());
    for (const auto* s : batch) {
        Tensor<T> flat(Shape{1, static_cast<int>(s->heatmaps.size())}, s->heatmaps.values());
        rows.push_back(std::move(flat));
    }
    return ops::concat_rows(tape, rows);
}

template <typename T>
MiFeatures<T> detach_features(const MiFeatures<T>& f) {
    MiFeatures<T> d;
    d.m = f.m.detached();
    d.m_u = f.m_u.detached();
    d.m_n = f.m_n.detached();
    d.f_vis = f.f_vis.detached();
    d.f_enh = f.f_enh.detached();
    d.y = f.y;
    return d;
}

} // namespace

template <typename T>
MetricsReport evaluate(TdmiModel<T>& model, const std::vector<Sample<T>>& eval_set) {
    if (eval_set.empty()) throw ConfigError("evaluate: dataset is empty");
    MetricsReport r;
    const int j = model.config().joints;
    const double size = model.config().image_size;
    std::vector<std::int64_t> hits05(static_cast<std::size_t>(j), 0),
        hits10(static_cast<std::size_t>(j), 0), totals(static_cast<std::size_t>(j), 0);
    for (const auto& sample : eval_set) {
        Tape<T> tape(false);
        auto out = model.forward(tape, sample);
        const auto decoded = decode_heatmaps(out.heatmaps);
        for (int k = 0; k < j; ++k) {
            if (!sample.visibility[static_cast<std::size_t>(k)]) continue;
            ++totals[static_cast<std::size_t>(k)];
            // Heatmap coordinates map back to crop pixels at stride 4.
            const double px = decoded[static_cast<std::size_t>(k)].x * 4.0;
            const double py = decoded[static_cast<std::size_t>(k)].y * 4.0;
            const double dx = px - sample.joints[static_cast<std::size_t>(k)].x;
            const double dy = py - sample.joints[static_cast<std::size_t>(k)].y;
            const double dist = std::sqrt(dx * dx + dy * dy);
            if (dist <= 0.05 * size) ++hits05[static_cast<std::size_t>(k)];
            if (dist <= 0.10 * size) ++hits10[static_cast<std::size_t>(k)];
        }
    }
    double sum05 = 0, sum10 = 0;
    int evaluated = 0;
    for (int k = 0; k < j; ++k) {
        if (totals[static_cast<std::size_t>(k)] == 0) {
            r.pck05.push_back(-1.0);
            r.pck10.push_back(-1.0);
            continue;
        }
        const double p05 = static_cast<double>(hits05[static_cast<std::size_t>(k)]) /
                           static_cast<double>(totals[static_cast<std::size_t>(k)]);
        const double p10 = static_cast<double>(hits10[static_cast<std::size_t>(k)]) /
                           static_cast<double>(totals[static_cast<std::size_t>(k)]);
        r.pck05.push_back(p05);
        r.pck10.push_back(p10);
        sum05 += p05;
        sum10 += p10;
        ++evaluated;
    }
    if (evaluated > 0) {
        r.mean_pck05 = sum05 / evaluated;
        r.mean_pck10 = sum10 / evaluated;
    }
    return r;
}

template <typename T>
TrainResult<T> train(const TrainConfig& cfg, const std::vector<Sample<T>>& train_set,
                     const std::vector<Sample<T>>& eval_set, const MetricsSink& sink) {
    cfg.validate();
    if (train_set.empty()) throw ConfigError("train: empty training set");
    const auto t_start = std::chrono::steady_clock::now();

    TdmiModel<T> model(cfg.model_config(), cfg.seed);
    Adam<T> main_adam, critic_adam;
    Rng batch_rng(Rng::stream(cfg.seed, "batch"));
    const bool mi_active = model.has_mi() && cfg.alpha != 0.0;

    TrainResult<T> result;
    result.metrics.variant = variant_name(cfg.variant);
    result.metrics.seed = cfg.seed;
    result.metrics.iterations = cfg.iterations;

    for (int it = 0; it < cfg.iterations; ++it) {
        const T lr = staged_lr<T>(static_cast<T>(cfg.lr), it, cfg.iterations);
        std::vector<const Sample<T>*> batch;
        for (int b = 0; b < cfg.batch_size; ++b)
            batch.push_back(&train_set[static_cast<std::size_t>(
                batch_rng.uniform_int(0, static_cast<int>(train_set.size()) - 1))]);

        Tape<T> tape;
        std::vector<Tensor<T>> losses;
        MiFeatures<T> feats;
        std::vector<Tensor<T>> m_rows, mu_rows, mn_rows, fv_rows, fe_rows;
        for (const auto* s : batch) {
            auto out = model.forward(tape, *s);
            losses.push_back(heatmap_loss(tape, out.heatmaps, *s));
            if (mi_active) {
                m_rows.push_back(out.m);
                mu_rows.push_back(out.m_u);
                mn_rows.push_back(out.m_n);
                fv_rows.push_back(out.f_vis);
                fe_rows.push_back(out.f_enh);
            }
        }
        Tensor<T> loss_h = losses[0];
        for (std::size_t i = 1; i < losses.size(); ++i) loss_h = ops::add(tape, loss_h, losses[i]);
        loss_h = ops::scale(tape, loss_h, T(1) / static_cast<T>(losses.size()));

        Tensor<T> loss = loss_h;
        if (mi_active) {
            feats.m = ops::concat_rows(tape, m_rows);
            feats.m_u = ops::concat_rows(tape, mu_rows);
            feats.m_n = ops::concat_rows(tape, mn_rows);
            feats.f_vis = ops::concat_rows(tape, fv_rows);
            feats.f_enh = ops::concat_rows(tape, fe_rows);
            feats.y = flatten_labels(tape, batch);

            // Critic phase on detached features, then the model loss uses the
            // freshly updated critics.
            const MiFeatures<T> frozen = detach_features(feats);
            for (int k = 0; k < cfg.critic_steps; ++k) {
                Tape<T> ctape;
                model.critic_params().zero_grad();
                Tensor<T> cobj = model.mi().critic_objective(ctape, frozen);
                ctape.backward(cobj);
                critic_adam.step(model.critic_params(), static_cast<T>(cfg.critic_lr));
            }
            MiLossTerms<T> terms = model.mi().loss_terms(tape, feats);
            loss = total_loss(tape, loss_h, terms.total, static_cast<T>(cfg.alpha));
        }

        const double loss_h_value = static_cast<double>(loss_h.item());
        if (!std::isfinite(static_cast<double>(loss.item())))
            throw NumericError("train: non-finite loss at iteration " + std::to_string(it) +
                               " (L_H=" + std::to_string(loss_h_value) + ")");
        if (it == 0) result.metrics.initial_loss_h = loss_h_value;
        result.metrics.loss_h_curve.push_back(loss_h_value);

        model.params().zero_grad();
        model.critic_params().zero_grad();
        tape.backward(loss);
        main_adam.step(model.params(), lr);

        if (cfg.eval_interval > 0 && (it + 1) % cfg.eval_interval == 0 && sink) {
            MetricsReport r = evaluate(model, eval_set);
            r.variant = variant_name(cfg.variant);
            r.seed = cfg.seed;
            r.iterations = it + 1;
            r.initial_loss_h = result.metrics.initial_loss_h;
            r.final_loss_h = loss_h_value;
            sink(r.to_json());
        }
    }

    result.metrics.final_loss_h = result.metrics.loss_h_curve.back();
    {
        MetricsReport r = evaluate(model, eval_set);
        result.metrics.pck05 = r.pck05;
        result.metrics.pck10 = r.pck10;
        result.metrics.mean_pck05 = r.mean_pck05;
        result.metrics.mean_pck10 = r.mean_pck10;
    }
    result.metrics.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    if (sink) sink(result.metrics.to_json());

    result.checkpoint = build_checkpoint(model, main_adam, critic_adam);
    result.iteration = cfg.iterations;
    result.adam_step = main_adam.step_count();
    result.critic_adam_step = critic_adam.step_count();
    return result;
}

template <typename T>
TrainResult<T> train(const TrainConfig& cfg, const MetricsSink& sink) {
    const auto clips = cfg.clip_config();
    auto train_set = build_dataset<T>(train_data_seed(cfg.seed), cfg.train_clips, clips);
    auto eval_set = build_dataset<T>(eval_data_seed(cfg.seed), cfg.eval_clips, clips);
    return train(cfg, train_set, eval_set, sink);
}

template <typename T>
Archive build_checkpoint(const TdmiModel<T>& model, const Adam<T>& main_adam,
                         const Adam<T>& critic_adam) {
    Archive a = model.to_archive();
    main_adam.to_archive(a, "adam.main");
    critic_adam.to_archive(a, "adam.critic");
    return a;
}

template <typename T>
void restore_checkpoint(const Archive& a, TdmiModel<T>& model, Adam<T>* main_adam,
                        Adam<T>* critic_adam) {
    model.load_archive(a);
    if (main_adam) main_adam->load_archive(a, "adam.main", model.params());
    if (critic_adam) critic_adam->load_archive(a, "adam.critic", model.critic_params());
}

#define TDMI_INSTANTIATE_TRAINER(T)                                                                \
    template Tensor<T> heatmap_loss(Tape<T>&, const Tensor<T>&, const Sample<T>&);                 \
    template Tensor<T> total_loss(Tape<T>&, const Tensor<T>&, const Tensor<T>&, T);                \
    template MetricsReport evaluate(TdmiModel<T>&, const std::vector<Sample<T>>&);                 \
    template TrainResult<T> train(const TrainConfig&, const std::vector<Sample<T>>&,               \
                                  const std::vector<Sample<T>>&, const MetricsSink&);              \
    template TrainResult<T> train(const TrainConfig&, const MetricsSink&);                         \
    template Archive build_checkpoint(const TdmiModel<T>&, const Adam<T>&, const Adam<T>&);        \
    template void restore_checkpoint(const Archive&, TdmiModel<T>&, Adam<T>*, Adam<T>*);

TDMI_INSTANTIATE_TRAINER(float)
TDMI_INSTANTIATE_TRAINER(double)

} // namespace tdmi
