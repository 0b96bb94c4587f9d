#include "tdmi/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "tdmi/ops.hpp"
#include "tdmi/rng.hpp"

namespace tdmi {

namespace {

template <typename T>
double eval_loss(const std::function<Tensor<T>(Tape<T>&)>& loss_fn) {
    Tape<T> tape(false);
    return static_cast<double>(loss_fn(tape).item());
}

std::vector<std::size_t> pick_components(std::size_t n, int max_components, std::uint64_t seed) {
    std::vector<std::size_t> idx;
    if (max_components < 0 || static_cast<std::size_t>(max_components) >= n) {
        idx.resize(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        return idx;
    }
    Rng rng(seed);
    std::unordered_set<std::size_t> seen;
    while (idx.size() < static_cast<std::size_t>(max_components)) {
        const auto i = static_cast<std::size_t>(rng.next_u64() % n);
        if (seen.insert(i).second) idx.push_back(i);
    }
    std::sort(idx.begin(), idx.end());
    return idx;
}

} // namespace

template <typename T>
double grad_check_wrt(const std::function<Tensor<T>(Tape<T>&)>& loss_fn, const Tensor<T>& wrt,
                      const GradCheckOptions& opt) {
    if (opt.eps < 1e-7 || opt.eps > 1e-3)
        throw ContractError("grad_check: eps must lie in [1e-7, 1e-3]");
    if (!wrt.requires_grad()) throw ContractError("grad_check: target tensor does not require grad");

    const double l0 = eval_loss<T>(loss_fn);
    const double l1 = eval_loss<T>(loss_fn);
    if (!(l0 == l1))
        throw DeterminismError("grad_check: repeated evaluations disagree (" + std::to_string(l0) +
                               " vs " + std::to_string(l1) + ")");

    wrt.ptr()->grad.assign(wrt.values().size(), T(0));
    {
        Tape<T> tape;
        Tensor<T> loss = loss_fn(tape);
        tape.backward(loss);
    }
    std::vector<double> analytic(wrt.values().size());
    for (std::size_t i = 0; i < analytic.size(); ++i)
        analytic[i] = static_cast<double>(wrt.ptr()->grad[i]);

    std::vector<std::size_t> components;
    if (opt.select_largest && opt.max_components > 0 &&
        static_cast<std::size_t>(opt.max_components) < analytic.size()) {
        components.resize(analytic.size());
        for (std::size_t i = 0; i < components.size(); ++i) components[i] = i;
        std::partial_sort(components.begin(), components.begin() + opt.max_components,
                          components.end(), [&analytic](std::size_t a, std::size_t b) {
                              const double da = std::abs(analytic[a]), db = std::abs(analytic[b]);
                              return da != db ? da > db : a < b;
                          });
        components.resize(static_cast<std::size_t>(opt.max_components));
        std::sort(components.begin(), components.end());
    } else {
        components = pick_components(analytic.size(), opt.max_components, opt.seed);
    }

    auto& vals = wrt.ptr()->value;
    double max_rel = 0.0;
    for (std::size_t i : components) {
        const T saved = vals[i];
        vals[i] = saved + static_cast<T>(opt.eps);
        const double lp = eval_loss<T>(loss_fn);
        vals[i] = saved - static_cast<T>(opt.eps);
        const double lm = eval_loss<T>(loss_fn);
        vals[i] = saved;
        const double numeric = (lp - lm) / (2.0 * opt.eps);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
        max_rel = std::max(max_rel, std::abs(analytic[i] - numeric) / denom);
    }
    return max_rel;
}

template <typename T>
double grad_check(const std::function<Tensor<T>(Tape<T>&, const Tensor<T>&)>& f, const Tensor<T>& x,
                  const GradCheckOptions& opt) {
    Tensor<T> target = x;
    target.set_requires_grad(true);
    auto loss_fn = [&f, &target](Tape<T>& tape) {
        return ops::sum_all(tape, f(tape, target));
    };
    return grad_check_wrt<T>(loss_fn, target, opt);
}

template double grad_check(const std::function<Tensor<float>(Tape<float>&, const Tensor<float>&)>&,
                           const Tensor<float>&, const GradCheckOptions&);
template double grad_check(const std::function<Tensor<double>(Tape<double>&, const Tensor<double>&)>&,
                           const Tensor<double>&, const GradCheckOptions&);
template double grad_check_wrt(const std::function<Tensor<float>(Tape<float>&)>&,
                               const Tensor<float>&, const GradCheckOptions&);
template double grad_check_wrt(const std::function<Tensor<double>(Tape<double>&)>&,
                               const Tensor<double>&, const GradCheckOptions&);

} // namespace tdmi
