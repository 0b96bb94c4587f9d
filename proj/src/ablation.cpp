#include "tdmi/ablation.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace tdmi {

std::vector<Variant> default_ablation_variants() {
    return {Variant::kBackboneOnly,       Variant::kTdeOnly,     Variant::kTdmi,
            Variant::kSingleStage,        Variant::kSimpleFusion, Variant::kNoSpatialModulation,
            Variant::kNoMiObjective,      Variant::kChannelSplit};
}

double AblationReport::pck10_of(const std::string& variant, std::uint64_t seed) const {
    for (const auto& r : runs)
        if (r.variant == variant && r.seed == seed) return r.mean_pck10;
    throw ContractError("ablation report has no run for " + variant + " seed " + std::to_string(seed));
}

namespace {

bool has_variant(const std::vector<Variant>& vs, Variant v) {
    return std::find(vs.begin(), vs.end(), v) != vs.end();
}

// Per-seed ordering: lhs >= rhs in each seed; pass when satisfied in all but
// at most one seed (the trend-level criterion).
OrderingVerdict per_seed_verdict(const AblationReport& rep, const std::vector<std::uint64_t>& seeds,
                                 Variant lhs, Variant rhs) {
    OrderingVerdict v;
    v.name = std::string(variant_name(lhs)) + " >= " + variant_name(rhs) + " (per seed)";
    for (std::uint64_t s : seeds) {
        const double a = rep.pck10_of(variant_name(lhs), s);
        const double b = rep.pck10_of(variant_name(rhs), s);
        if (a >= b) ++v.satisfied;
        ++v.total;
    }
    v.lhs_mean = rep.mean_pck10.at(variant_name(lhs));
    v.rhs_mean = rep.mean_pck10.at(variant_name(rhs));
    v.pass = v.satisfied >= v.total - 1;
    return v;
}

OrderingVerdict mean_verdict(const AblationReport& rep, Variant lhs, Variant rhs, bool strict) {
    OrderingVerdict v;
    v.name = std::string(variant_name(lhs)) + (strict ? " > " : " >= ") + variant_name(rhs) + " (mean)";
    v.lhs_mean = rep.mean_pck10.at(variant_name(lhs));
    v.rhs_mean = rep.mean_pck10.at(variant_name(rhs));
    v.pass = strict ? v.lhs_mean > v.rhs_mean : v.lhs_mean >= v.rhs_mean;
    v.total = 1;
    v.satisfied = v.pass ? 1 : 0;
    return v;
}

} // namespace

AblationReport run_ablation_suite(const AblationConfig& cfg, const MetricsSink& sink) {
    if (cfg.seeds.empty()) throw ConfigError("ablation: at least one seed is required");
    std::vector<Variant> variants = cfg.variants.empty() ? default_ablation_variants() : cfg.variants;

    // Identical data across variants: one train/eval pair per seed.
    const ClipConfig clips = cfg.base.clip_config();
    std::vector<std::vector<Sample<float>>> train_sets, eval_sets;
    for (std::uint64_t s : cfg.seeds) {
        train_sets.push_back(build_dataset<float>(train_data_seed(s), cfg.base.train_clips, clips));
        eval_sets.push_back(build_dataset<float>(eval_data_seed(s), cfg.base.eval_clips, clips));
    }

    struct Task {
        Variant variant;
        std::size_t seed_idx;
    };
    std::vector<Task> tasks;
    for (Variant v : variants)
        for (std::size_t i = 0; i < cfg.seeds.size(); ++i) tasks.push_back({v, i});

    int workers = cfg.workers;
    if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
    const char* det = std::getenv("TDMI_DETERMINISTIC");
    if (det && std::string(det) == "1") workers = 1;
    workers = std::max(1, std::min<int>(workers, static_cast<int>(tasks.size())));

    std::vector<MetricsReport> results(tasks.size());
    std::atomic<std::size_t> next{0};
    std::mutex sink_mutex;
    auto worker_fn = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            TrainConfig tc = cfg.base;
            tc.variant = tasks[i].variant;
            tc.seed = cfg.seeds[tasks[i].seed_idx];
            auto r = train<float>(tc, train_sets[tasks[i].seed_idx], eval_sets[tasks[i].seed_idx]);
            results[i] = r.metrics;
            if (sink) {
                std::lock_guard<std::mutex> lock(sink_mutex);
                sink(r.metrics.to_json());
            }
        }
    };
    if (workers == 1) {
        worker_fn();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker_fn);
        for (auto& t : pool) t.join();
    }

    AblationReport rep;
    rep.runs = std::move(results);
    rep.sufficient_seeds = cfg.seeds.size() >= 3;
    for (Variant v : variants) {
        double s05 = 0, s10 = 0;
        for (std::uint64_t s : cfg.seeds) {
            for (const auto& r : rep.runs)
                if (r.variant == variant_name(v) && r.seed == s) {
                    s05 += r.mean_pck05;
                    s10 += r.mean_pck10;
                }
        }
        rep.mean_pck05[variant_name(v)] = s05 / static_cast<double>(cfg.seeds.size());
        rep.mean_pck10[variant_name(v)] = s10 / static_cast<double>(cfg.seeds.size());
    }

    // Component study: full >= tde_only >= backbone_only.
    if (has_variant(variants, Variant::kTdmi) && has_variant(variants, Variant::kTdeOnly))
        rep.verdicts.push_back(per_seed_verdict(rep, cfg.seeds, Variant::kTdmi, Variant::kTdeOnly));
    if (has_variant(variants, Variant::kTdeOnly) && has_variant(variants, Variant::kBackboneOnly))
        rep.verdicts.push_back(
            per_seed_verdict(rep, cfg.seeds, Variant::kTdeOnly, Variant::kBackboneOnly));
    if (has_variant(variants, Variant::kTdmi) && has_variant(variants, Variant::kBackboneOnly))
        rep.verdicts.push_back(mean_verdict(rep, Variant::kTdmi, Variant::kBackboneOnly, true));
    // TDE design study: progressive beats simple concat, modulation adds on top,
    // multi-stage beats single-stage.
    if (has_variant(variants, Variant::kTdmi) && has_variant(variants, Variant::kNoSpatialModulation))
        rep.verdicts.push_back(mean_verdict(rep, Variant::kTdmi, Variant::kNoSpatialModulation, false));
    if (has_variant(variants, Variant::kNoSpatialModulation) &&
        has_variant(variants, Variant::kSimpleFusion))
        rep.verdicts.push_back(
            mean_verdict(rep, Variant::kNoSpatialModulation, Variant::kSimpleFusion, false));
    if (has_variant(variants, Variant::kSimpleFusion) && has_variant(variants, Variant::kSingleStage))
        rep.verdicts.push_back(mean_verdict(rep, Variant::kSimpleFusion, Variant::kSingleStage, false));
    // RDM design study: MI objective over bare factorization over none, and
    // attention factorization over channel splitting.
    if (has_variant(variants, Variant::kTdmi) && has_variant(variants, Variant::kNoMiObjective))
        rep.verdicts.push_back(mean_verdict(rep, Variant::kTdmi, Variant::kNoMiObjective, false));
    if (has_variant(variants, Variant::kNoMiObjective) && has_variant(variants, Variant::kTdeOnly))
        rep.verdicts.push_back(mean_verdict(rep, Variant::kNoMiObjective, Variant::kTdeOnly, false));
    if (has_variant(variants, Variant::kTdmi) && has_variant(variants, Variant::kChannelSplit))
        rep.verdicts.push_back(mean_verdict(rep, Variant::kTdmi, Variant::kChannelSplit, true));
    return rep;
}

std::string AblationReport::to_json() const {
    nlohmann::json j;
    j["note"] = "PCK@r on single-person synthetic clips stands in for PoseTrack mAP";
    j["sufficient_seeds"] = sufficient_seeds;
    for (const auto& r : runs) j["runs"].push_back(nlohmann::json::parse(r.to_json()));
    j["mean_pck"]["0.05"] = mean_pck05;
    j["mean_pck"]["0.10"] = mean_pck10;
    for (const auto& v : verdicts) {
        nlohmann::json jv;
        jv["check"] = v.name;
        jv["satisfied"] = v.satisfied;
        jv["total"] = v.total;
        jv["pass"] = v.pass;
        jv["lhs_mean_pck10"] = v.lhs_mean;
        jv["rhs_mean_pck10"] = v.rhs_mean;
        j["orderings"].push_back(jv);
    }
    return j.dump(2);
}

std::string AblationReport::to_text() const {
    std::ostringstream os;
    os << "Metric: PCK@r over visible joints (single-person synthetic substitute for mAP)\n\n";
    os << "variant                 mean PCK@0.05  mean PCK@0.10\n";
    for (const auto& [name, p05] : mean_pck05) {
        os.width(22);
        os << std::left << name;
        os << "  ";
        os.width(13);
        os << p05;
        os << "  " << mean_pck10.at(name) << "\n";
    }
    os << "\n";
    if (!sufficient_seeds) os << "WARNING: insufficient seeds for ordering test (need >= 3)\n";
    for (const auto& v : verdicts)
        os << (v.pass ? "[ok]   " : "[FAIL] ") << v.name << "  (" << v.satisfied << "/" << v.total
           << ", means " << v.lhs_mean << " vs " << v.rhs_mean << ")\n";
    return os.str();
}

} // namespace tdmi
