#pragma once

#include <string>

#include "tdmi/blocks.hpp"

namespace tdmi {

enum class BoundKind { kLower, kUpper };

template <typename T>
struct MiEstimate {
    T value = 0; // nats
    BoundKind kind = BoundKind::kLower;
};

struct CriticConfig {
    int x_dim = 0;
    int y_dim = 0;
    int hidden = 64;
    int embed = 16;
};

// Contrastive density-ratio estimator (InfoNCE with in-batch negatives and a
// separable critic). The estimate is bounded above by ln(B), so it is used
// for MI terms that are maximized.
template <typename T>
class LowerCritic {
public:
    LowerCritic() = default;
    LowerCritic(const std::string& prefix, const CriticConfig& cfg, ParamStore<T>& params, Rng& rng);

    // x: [B, x_dim], y: [B, y_dim] paired samples -> scalar estimate in nats.
    Tensor<T> estimate(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& y) const;

    // Critic training objective (to minimize): the negated estimate.
    Tensor<T> objective(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& y) const;

private:
    Linear<T> gx1_, gx2_, hy1_, hy2_;
};

// Variational upper bound with a learned conditional Gaussian q(y|x)
// (diagonal covariance). Estimate = E_joint[log q] - E_shifted[log q], with
// the product-of-marginals expectation sampled by rotating the batch by one.
// Used for MI terms that are minimized.
template <typename T>
class UpperCritic {
public:
    UpperCritic() = default;
    UpperCritic(const std::string& prefix, const CriticConfig& cfg, ParamStore<T>& params, Rng& rng);

    Tensor<T> estimate(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& y) const;

    // Critic training objective (to minimize): negative mean log-likelihood
    // of the paired batch under q(y|x).
    Tensor<T> objective(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& y) const;

private:
    // Row-wise log q(y_i | x_i) -> [B].
    Tensor<T> loglik_rows(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& y) const;

    Linear<T> trunk_, mu_head_, var_head_;
};

// Spec-level entry point: checks the B >= 16 sample-size contract and runs
// the matching critic.
template <typename T>
MiEstimate<T> estimate_mi(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& y,
                          const LowerCritic<T>& critic);
template <typename T>
MiEstimate<T> estimate_mi(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& y,
                          const UpperCritic<T>& critic);

// The four terms of the mutual-information objective and their composition
// total = t1 - t2 + t3 + t4.
template <typename T>
struct MiLossTerms {
    Tensor<T> t1, t2, t3, t4;
    Tensor<T> total;
};

template <typename T>
Tensor<T> compose_mi_total(Tape<T>& tape, const Tensor<T>& t1, const Tensor<T>& t2,
                           const Tensor<T>& t3, const Tensor<T>& t4);

// Batch features entering the MI objective, one row per sample. All feature
// vectors are GAP-reduced channel descriptors except y, which is the
// flattened ground-truth heatmap stack.
template <typename T>
struct MiFeatures {
    Tensor<T> m;     // vanilla motion descriptor
    Tensor<T> m_u;   // useful part
    Tensor<T> m_n;   // noisy part
    Tensor<T> f_vis; // visual feature descriptor
    Tensor<T> f_enh; // enhanced feature descriptor
    Tensor<T> y;     // labels (constant w.r.t. the model)
};

struct MiFeatureDims {
    int motion = 0, useful = 0, noisy = 0, visual = 0, enhanced = 0, label = 0;
};

// Owns the six critics behind the objective. Critic parameters live in their
// own store so the trainer can interleave critic steps with model steps.
template <typename T>
class MiObjective {
public:
    MiObjective() = default;
    MiObjective(const MiFeatureDims& dims, ParamStore<T>& critic_params, Rng& rng, bool stop_grad_mn);

    // Loss terms evaluated with the current critics; model gradients flow
    // through the estimator values.
    MiLossTerms<T> loss_terms(Tape<T>& tape, const MiFeatures<T>& f) const;

    // Joint critic objective on detached features (the critics are
    // parameter-disjoint, so one step on the sum equals per-critic steps).
    Tensor<T> critic_objective(Tape<T>& tape, const MiFeatures<T>& f) const;

private:
    UpperCritic<T> up_mu_mn_, up_mu_y_, up_fv_y_;
    LowerCritic<T> lo_m_mu_, lo_mu_fe_, lo_fv_fe_;
    bool stop_grad_mn_ = false;
};

} // namespace tdmi
