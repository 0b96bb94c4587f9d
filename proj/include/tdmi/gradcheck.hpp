#pragma once

#include <functional>

#include "tdmi/tensor.hpp"

namespace tdmi {

struct GradCheckOptions {
    double eps = 1e-5;
    // Number of components to probe with central differences; -1 checks all.
    // Sampling is deterministic given `seed`.
    int max_components = -1;
    std::uint64_t seed = 0x9d2c5680;
    // Probe the components with the largest |analytic gradient| instead of a
    // random subset. Central differences cannot resolve components whose
    // gradient sits below the evaluation noise floor, so sampled checks of
    // large tensors probe where the comparison is numerically meaningful.
    bool select_largest = false;
};

// Max over probed components of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8),
// where analytic comes from one reverse sweep of sum(f(x)) and numeric from
// central finite differences. Throws DeterminismError when two evaluations of
// f disagree bitwise, and ContractError when eps is outside [1e-7, 1e-3].
template <typename T>
double grad_check(const std::function<Tensor<T>(Tape<T>&, const Tensor<T>&)>& f, const Tensor<T>& x,
                  const GradCheckOptions& opt = {});

// General form: `loss_fn` rebuilds the scalar loss from the current values of
// all leaves it touches; `wrt` is the leaf whose gradient is verified. Used
// for checking gradients w.r.t. module parameters.
template <typename T>
double grad_check_wrt(const std::function<Tensor<T>(Tape<T>&)>& loss_fn, const Tensor<T>& wrt,
                      const GradCheckOptions& opt = {});

} // namespace tdmi
