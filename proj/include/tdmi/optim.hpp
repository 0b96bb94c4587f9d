#pragma once

#include <cmath>
#include <map>

#include "tdmi/params.hpp"

namespace tdmi {

// Adam with bias correction; beta = (0.9, 0.999), eps = 1e-8. Update order is
// the parameter store's name order, so steps are deterministic.
template <typename T>
class Adam {
public:
    explicit Adam(T beta1 = T(0.9), T beta2 = T(0.999), T eps = T(1e-8))
        : beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(ParamStore<T>& params, T lr) {
        ++t_;
        const T bc1 = T(1) - static_cast<T>(std::pow(static_cast<double>(beta1_), t_));
        const T bc2 = T(1) - static_cast<T>(std::pow(static_cast<double>(beta2_), t_));
        for (const auto& [name, param] : params) {
            auto& p = const_cast<Tensor<T>&>(param);
            auto& slot = slots_[name];
            if (slot.m.empty()) {
                slot.m.assign(p.values().size(), T(0));
                slot.v.assign(p.values().size(), T(0));
            }
            const auto& g = p.grad();
            for (std::size_t i = 0; i < g.size(); ++i) {
                slot.m[i] = beta1_ * slot.m[i] + (T(1) - beta1_) * g[i];
                slot.v[i] = beta2_ * slot.v[i] + (T(1) - beta2_) * g[i] * g[i];
                const T mhat = slot.m[i] / bc1;
                const T vhat = slot.v[i] / bc2;
                p.values()[i] -= lr * mhat / (static_cast<T>(std::sqrt(static_cast<double>(vhat))) + eps_);
            }
        }
    }

    std::int64_t step_count() const { return t_; }
    void set_step_count(std::int64_t t) { t_ = t; }

    void to_archive(Archive& a, const std::string& prefix) const {
        for (const auto& [name, slot] : slots_) {
            ArchiveEntry m, v;
            m.shape = {static_cast<int>(slot.m.size())};
            v.shape = {static_cast<int>(slot.v.size())};
            m.data.assign(slot.m.begin(), slot.m.end());
            v.data.assign(slot.v.begin(), slot.v.end());
            a.emplace(prefix + ".m." + name, std::move(m));
            a.emplace(prefix + ".v." + name, std::move(v));
        }
    }

    void load_archive(const Archive& a, const std::string& prefix, const ParamStore<T>& params) {
        for (const auto& [name, param] : params) {
            auto mi = a.find(prefix + ".m." + name);
            auto vi = a.find(prefix + ".v." + name);
            if (mi == a.end() || vi == a.end())
                throw ContractError("checkpoint is missing optimizer moments for " + name);
            auto& slot = slots_[name];
            slot.m.assign(mi->second.data.begin(), mi->second.data.end());
            slot.v.assign(vi->second.data.begin(), vi->second.data.end());
            if (slot.m.size() != param.values().size())
                throw ShapeError("optimizer moment size mismatch for " + name);
        }
    }

private:
    struct Slot {
        std::vector<T> m, v;
    };
    std::map<std::string, Slot> slots_;
    T beta1_, beta2_, eps_;
    std::int64_t t_ = 0;
};

// Staged decay: the base rate drops by 10x at 30%, 60% and 90% of the
// iteration budget (the proportional mapping of the 6/12/18-of-20-epoch
// schedule).
template <typename T>
T staged_lr(T base, std::int64_t iter, std::int64_t total_iters) {
    int k = 0;
    for (double frac : {0.3, 0.6, 0.9})
        if (iter >= static_cast<std::int64_t>(frac * static_cast<double>(total_iters))) ++k;
    T lr = base;
    for (int i = 0; i < k; ++i) lr = lr / T(10);
    return lr;
}

} // namespace tdmi
