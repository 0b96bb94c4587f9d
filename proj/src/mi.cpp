#include "tdmi/mi.hpp"

#include <cmath>

namespace tdmi {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kVarFloor = 1e-4;

template <typename T>
void check_pair(const Tensor<T>& x, const Tensor<T>& y, const char* who) {
    if (x.rank() != 2 || y.rank() != 2 || x.dim(0) != y.dim(0))
        throw ShapeError(std::string(who) + ": expects paired [B,dx]/[B,dy] batches, got " +
                         shape_str(x.shape()) + " and " + shape_str(y.shape()));
    if (x.dim(0) < 2) throw SampleSizeError(std::string(who) + ": needs at least 2 samples");
}
} // namespace

template <typename T>
LowerCritic<T>::LowerCritic(const std::string& prefix, const CriticConfig& cfg, ParamStore<T>& params,
                            Rng& rng) {
    gx1_ = Linear<T>(params, rng, prefix + ".g.fc1", cfg.x_dim, cfg.hidden);
    gx2_ = Linear<T>(params, rng, prefix + ".g.fc2", cfg.hidden, cfg.embed);
    hy1_ = Linear<T>(params, rng, prefix + ".h.fc1", cfg.y_dim, cfg.hidden);
    hy2_ = Linear<T>(params, rng, prefix + ".h.fc2", cfg.hidden, cfg.embed);
}

template <typename T>
Tensor<T> LowerCritic<T>::estimate(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& y) const {
    check_pair(x, y, "LowerCritic");
    const int b = x.dim(0);
    Tensor<T> g = gx2_.forward(tape, act(tape, gx1_.forward(tape, x)));
    Tensor<T> h = hy2_.forward(tape, act(tape, hy1_.forward(tape, y)));
    Tensor<T> scores = ops::matmul_bt(tape, g, h); // [B,B]
    Tensor<T> joint = ops::diag_mean(tape, scores);
    Tensor<T> lse = ops::mean_all(tape, ops::rowwise_logsumexp(tape, scores));
    // I_nce = E_i[s_ii - log((1/B) sum_j exp s_ij)] <= ln B
    Tensor<T> est = ops::sub(tape, joint, lse);
    return ops::add_scalar(tape, est, static_cast<T>(std::log(static_cast<double>(b))));
}

template <typename T>
Tensor<T> LowerCritic<T>::objective(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& y) const {
    return ops::neg(tape, estimate(tape, x, y));
}

template <typename T>
UpperCritic<T>::UpperCritic(const std::string& prefix, const CriticConfig& cfg, ParamStore<T>& params,
                            Rng& rng) {
    trunk_ = Linear<T>(params, rng, prefix + ".trunk", cfg.x_dim, cfg.hidden);
    mu_head_ = Linear<T>(params, rng, prefix + ".mu", cfg.hidden, cfg.y_dim);
    var_head_ = Linear<T>(params, rng, prefix + ".var", cfg.hidden, cfg.y_dim);
}

template <typename T>
Tensor<T> UpperCritic<T>::loglik_rows(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& y) const {
    const int d = y.dim(1);
    Tensor<T> h = act(tape, trunk_.forward(tape, x));
    Tensor<T> mu = mu_head_.forward(tape, h);
    // var = softplus(raw) + floor keeps the density smooth and bounded away
    // from zero without clamping.
    Tensor<T> var = ops::add_scalar(tape, ops::softplus(tape, var_head_.forward(tape, h)),
                                    static_cast<T>(kVarFloor));
    Tensor<T> logv = ops::log(tape, var);
    Tensor<T> diff = ops::sub(tape, y, mu);
    Tensor<T> quad = ops::mul(tape, ops::mul(tape, diff, diff), ops::exp(tape, ops::neg(tape, logv)));
    Tensor<T> per_dim = ops::add(tape, quad, logv);
    Tensor<T> row = ops::add_scalar(tape, ops::sum_rows(tape, per_dim),
                                    static_cast<T>(d * kLog2Pi));
    return ops::scale(tape, row, static_cast<T>(-0.5));
}

template <typename T>
Tensor<T> UpperCritic<T>::estimate(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& y) const {
    check_pair(x, y, "UpperCritic");
    const int b = y.dim(0);
    Tensor<T> joint = ops::mean_all(tape, loglik_rows(tape, x, y));
    // Product-of-marginals expectation via the rotate-by-one pairing.
    Tensor<T> y_rot = ops::concat_rows(
        tape, {ops::slice_rows(tape, y, 1, b), ops::slice_rows(tape, y, 0, 1)});
    Tensor<T> marginal = ops::mean_all(tape, loglik_rows(tape, x, y_rot));
    return ops::sub(tape, joint, marginal);
}

template <typename T>
Tensor<T> UpperCritic<T>::objective(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& y) const {
    check_pair(x, y, "UpperCritic");
    return ops::neg(tape, ops::mean_all(tape, loglik_rows(tape, x, y)));
}

template <typename T>
MiEstimate<T> estimate_mi(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& y,
                          const LowerCritic<T>& critic) {
    check_pair(x, y, "estimate_mi");
    if (x.dim(0) < 16)
        throw SampleSizeError("estimate_mi: needs a batch of at least 16 samples, got " +
                              std::to_string(x.dim(0)));
    return {critic.estimate(tape, x, y).item(), BoundKind::kLower};
}

template <typename T>
MiEstimate<T> estimate_mi(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& y,
                          const UpperCritic<T>& critic) {
    check_pair(x, y, "estimate_mi");
    if (x.dim(0) < 16)
        throw SampleSizeError("estimate_mi: needs a batch of at least 16 samples, got " +
                              std::to_string(x.dim(0)));
    return {critic.estimate(tape, x, y).item(), BoundKind::kUpper};
}

template <typename T>
Tensor<T> compose_mi_total(Tape<T>& tape, const Tensor<T>& t1, const Tensor<T>& t2,
                           const Tensor<T>& t3, const Tensor<T>& t4) {
    return ops::add(tape, ops::add(tape, ops::sub(tape, t1, t2), t3), t4);
}

template <typename T>
MiObjective<T>::MiObjective(const MiFeatureDims& d, ParamStore<T>& critic_params, Rng& rng,
                            bool stop_grad_mn)
    : stop_grad_mn_(stop_grad_mn) {
    // Minimized terms use the conditional-Gaussian upper bound, maximized
    // terms the contrastive lower bound; otherwise the objective would push
    // against the slack of the wrong-sided estimate.
    up_mu_mn_ = UpperCritic<T>("rdm.critic.mu_mn", {d.useful, d.noisy}, critic_params, rng);
    up_mu_y_ = UpperCritic<T>("rdm.critic.mu_y", {d.useful, d.label}, critic_params, rng);
    up_fv_y_ = UpperCritic<T>("rdm.critic.fv_y", {d.visual, d.label}, critic_params, rng);
    lo_m_mu_ = LowerCritic<T>("rdm.critic.m_mu", {d.motion, d.useful}, critic_params, rng);
    lo_mu_fe_ = LowerCritic<T>("rdm.critic.mu_fe", {d.useful, d.enhanced}, critic_params, rng);
    lo_fv_fe_ = LowerCritic<T>("rdm.critic.fv_fe", {d.visual, d.enhanced}, critic_params, rng);
}

template <typename T>
MiLossTerms<T> MiObjective<T>::loss_terms(Tape<T>& tape, const MiFeatures<T>& f) const {
    MiLossTerms<T> t;
    const Tensor<T> m_n = stop_grad_mn_ ? f.m_n.detached() : f.m_n;
    t.t1 = up_mu_mn_.estimate(tape, f.m_u, m_n);
    t.t2 = lo_m_mu_.estimate(tape, f.m, f.m_u);
    t.t3 = ops::sub(tape, up_mu_y_.estimate(tape, f.m_u, f.y),
                    lo_mu_fe_.estimate(tape, f.m_u, f.f_enh));
    t.t4 = ops::sub(tape, up_fv_y_.estimate(tape, f.f_vis, f.y),
                    lo_fv_fe_.estimate(tape, f.f_vis, f.f_enh));
    t.total = compose_mi_total(tape, t.t1, t.t2, t.t3, t.t4);
    return t;
}

template <typename T>
Tensor<T> MiObjective<T>::critic_objective(Tape<T>& tape, const MiFeatures<T>& f) const {
    Tensor<T> obj = up_mu_mn_.objective(tape, f.m_u, f.m_n);
    obj = ops::add(tape, obj, up_mu_y_.objective(tape, f.m_u, f.y));
    obj = ops::add(tape, obj, up_fv_y_.objective(tape, f.f_vis, f.y));
    obj = ops::add(tape, obj, lo_m_mu_.objective(tape, f.m, f.m_u));
    obj = ops::add(tape, obj, lo_mu_fe_.objective(tape, f.m_u, f.f_enh));
    obj = ops::add(tape, obj, lo_fv_fe_.objective(tape, f.f_vis, f.f_enh));
    return obj;
}

#define TDMI_INSTANTIATE_MI(T)                                                                     \
    template class LowerCritic<T>;                                                                 \
    template class UpperCritic<T>;                                                                 \
    template class MiObjective<T>;                                                                 \
    template MiEstimate<T> estimate_mi(Tape<T>&, const Tensor<T>&, const Tensor<T>&,              \
                                       const LowerCritic<T>&);                                     \
    template MiEstimate<T> estimate_mi(Tape<T>&, const Tensor<T>&, const Tensor<T>&,              \
                                       const UpperCritic<T>&);                                     \
    template Tensor<T> compose_mi_total(Tape<T>&, const Tensor<T>&, const Tensor<T>&,             \
                                        const Tensor<T>&, const Tensor<T>&);

TDMI_INSTANTIATE_MI(float)
TDMI_INSTANTIATE_MI(double)

} // namespace tdmi
