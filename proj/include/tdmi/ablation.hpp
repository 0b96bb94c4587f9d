#pragma once

#include <map>

#include "tdmi/trainer.hpp"

namespace tdmi {

struct AblationConfig {
    TrainConfig base;
    std::vector<std::uint64_t> seeds;
    std::vector<Variant> variants; // empty: the full variant set of the study tables
    int workers = 0;               // 0: hardware concurrency (1 in deterministic mode)
};

struct OrderingVerdict {
    std::string name;    // e.g. "tdmi >= tde_only (per seed)"
    int satisfied = 0;   // seeds satisfying the ordering (per-seed checks)
    int total = 0;
    bool pass = false;
    double lhs_mean = 0, rhs_mean = 0;
};

struct AblationReport {
    std::vector<MetricsReport> runs; // one per (variant, seed), variant-major order
    std::map<std::string, double> mean_pck05, mean_pck10;
    std::vector<OrderingVerdict> verdicts;
    bool sufficient_seeds = true; // ordering checks need >= 3 seeds

    double pck10_of(const std::string& variant, std::uint64_t seed) const;
    std::string to_json() const;
    std::string to_text() const; // human-readable table + verdict lines
};

// Trains every requested variant on identical per-seed data and reports
// per-variant means plus the ordering checks of the component/TDE/RDM
// studies. Runs are independent and may execute in parallel; results are
// identical to sequential execution.
AblationReport run_ablation_suite(const AblationConfig& cfg, const MetricsSink& sink = {});

// Default variant set: the component study rows plus the TDE-design and
// RDM-design axes.
std::vector<Variant> default_ablation_variants();

} // namespace tdmi
