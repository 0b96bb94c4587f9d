#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "tdmi/tensor.hpp"

namespace tdmi {

struct VerifyResult {
    std::string name;
    bool pass = false;
    double seconds = 0;
    std::string message; // failure detail or short summary
};

// Runs every built-in check whose name contains `filter` (empty runs all)
// and streams one line per check to `log`. Check names:
//   grad.primitives, grad.modules, grad.full_model,
//   deform.degenerate, deform.integer_shift,
//   tde.exactness, mi.oracle,
//   geometry.crop, geometry.heatmap, checkpoint.roundtrip
std::vector<VerifyResult> run_verify(const std::string& filter, std::ostream& log);

bool all_passed(const std::vector<VerifyResult>& results);

// Gaussian MI oracle protocol: fits a fresh contrastive critic on samples of
// a correlated 1-d Gaussian pair (correlation rho) for `steps` minibatch
// updates, then evaluates the lower bound on a fresh batch of `eval_batch`
// samples. Deterministic given the seed.
double gaussian_lower_bound(double rho, std::uint64_t seed, int eval_batch = 1024, int steps = 2000,
                            int minibatch = 256);

} // namespace tdmi
