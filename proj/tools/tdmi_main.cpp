// Command-line entry point: generate / train / eval / ablate / verify.
//
// Exit codes: 0 success, 1 user/config error, 2 internal check failure.
// TDMI_DETERMINISTIC=1 serializes ablation runs; TDMI_CHECKED=1 enables
// non-finite value detection in every primitive.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tdmi/ablation.hpp"
#include "tdmi/config.hpp"
#include "tdmi/verify.hpp"

namespace fs = std::filesystem;
using namespace tdmi;

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides; // key=value with dotted keys
    std::string variant;
    std::int64_t seed = -1;
};

TrainConfig resolve_config(const CommonOpts& opts) {
    TrainConfig cfg = default_train_config();
    if (!opts.config_path.empty()) cfg = load_config_file(opts.config_path, cfg);
    for (const auto& kv : opts.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!opts.variant.empty()) cfg.variant = parse_variant(opts.variant);
    if (opts.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opts.seed);
    cfg.validate();
    return cfg;
}

fs::path prepare_out_dir(const std::string& out) {
    if (out.empty()) throw ConfigError("an --out directory is required");
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw ConfigError("cannot create output directory '" + out + "': " + ec.message());
    const fs::path probe = fs::path(out) / ".write_probe";
    std::ofstream test(probe);
    if (!test) throw ConfigError("output directory '" + out + "' is not writable");
    test.close();
    fs::remove(probe, ec);
    return {out};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << text;
}

void echo_resolved_config(const fs::path& dir, const TrainConfig& cfg) {
    write_text(dir / "config.resolved.ini", emit_config(cfg));
}

int cmd_generate(const CommonOpts& opts, int count, const std::string& out) {
    TrainConfig cfg = resolve_config(opts);
    const fs::path dir = prepare_out_dir(out);
    const ClipConfig clips = cfg.clip_config();
    std::vector<std::uint64_t> seeds;
    char name[32];
    for (int i = 0; i < count; ++i) {
        const std::uint64_t clip_seed = cfg.seed + static_cast<std::uint64_t>(i);
        seeds.push_back(clip_seed);
        const SyntheticClip clip = generate_clip(clip_seed, clips);
        std::snprintf(name, sizeof(name), "clip_%05d", i);
        save_clip(clip, (dir / name).string());
    }
    write_text(dir / "manifest.txt", dataset_manifest(seeds, config_hash(cfg)));
    echo_resolved_config(dir, cfg);
    std::cout << "wrote " << count << " clips to " << dir.string() << "\n";
    return 0;
}

void write_run_meta(const fs::path& dir, const TrainConfig& cfg, const TrainResult<float>& result) {
    nlohmann::json meta;
    meta["config_hash"] = config_hash(cfg);
    meta["variant"] = variant_name(cfg.variant);
    meta["seed"] = cfg.seed;
    meta["iteration"] = result.iteration;
    meta["adam_step"] = result.adam_step;
    meta["critic_adam_step"] = result.critic_adam_step;
    write_text(dir / "meta.json", meta.dump(2) + "\n");
}

int cmd_train(const CommonOpts& opts, const std::string& out) {
    TrainConfig cfg = resolve_config(opts);
    const fs::path dir = prepare_out_dir(out);
    echo_resolved_config(dir, cfg);
    std::ofstream metrics(dir / "metrics.jsonl");
    auto sink = [&metrics](const std::string& line) { metrics << line << "\n" << std::flush; };
    auto result = train<float>(cfg, sink);
    write_archive((dir / "checkpoint.bin").string(), result.checkpoint);
    write_run_meta(dir, cfg, result);
    write_text(dir / "report.json", result.metrics.to_json() + "\n");
    std::cout << "final mean PCK@0.05 " << result.metrics.mean_pck05 << ", PCK@0.10 "
              << result.metrics.mean_pck10 << " (" << result.metrics.wall_seconds << "s)\n";
    return 0;
}

int cmd_eval(const CommonOpts& opts, const std::string& checkpoint, const std::string& out) {
    TrainConfig cfg = resolve_config(opts);
    TdmiModel<float> model(cfg.model_config(), cfg.seed);
    Adam<float> main_adam, critic_adam;
    restore_checkpoint(read_archive(checkpoint), model, &main_adam, &critic_adam);
    auto eval_set = build_dataset<float>(eval_data_seed(cfg.seed), cfg.eval_clips, cfg.clip_config());
    MetricsReport r = evaluate(model, eval_set);
    r.variant = variant_name(cfg.variant);
    r.seed = cfg.seed;
    std::cout << r.to_json() << "\n";
    if (!out.empty()) {
        const fs::path dir = prepare_out_dir(out);
        echo_resolved_config(dir, cfg);
        write_text(dir / "eval.json", r.to_json() + "\n");
    }
    return 0;
}

int cmd_ablate(const CommonOpts& opts, const std::string& seeds_csv, const std::string& variants_csv,
               int workers, const std::string& out) {
    AblationConfig acfg;
    acfg.base = resolve_config(opts);
    std::stringstream ss(seeds_csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) acfg.seeds.push_back(std::stoull(item));
    if (acfg.seeds.empty()) throw ConfigError("--seeds expects a comma-separated list");
    if (!variants_csv.empty()) {
        std::stringstream vs(variants_csv);
        while (std::getline(vs, item, ','))
            if (!item.empty()) acfg.variants.push_back(parse_variant(item));
    }
    acfg.workers = workers;
    const fs::path dir = prepare_out_dir(out);
    echo_resolved_config(dir, acfg.base);
    std::ofstream metrics(dir / "metrics.jsonl");
    auto sink = [&metrics](const std::string& line) { metrics << line << "\n" << std::flush; };
    const AblationReport rep = run_ablation_suite(acfg, sink);
    write_text(dir / "ablation.json", rep.to_json() + "\n");
    write_text(dir / "ablation.txt", rep.to_text());
    std::cout << rep.to_text();
    return 0;
}

int cmd_verify(const std::string& filter) {
    const auto results = run_verify(filter, std::cout);
    return all_passed(results) ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"TDMI: temporal-difference video pose estimation on synthetic clips"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string out, checkpoint, seeds_csv, variants_csv, filter;
    int count = 4, workers = 0;

    auto add_common = [&](CLI::App* cmd, bool with_variant = true) {
        cmd->add_option("--config", opts.config_path, "configuration file (INI sections)");
        cmd->add_option("--set", opts.overrides, "override a config key (e.g. train.alpha=0.5)");
        if (with_variant) cmd->add_option("--variant", opts.variant, "model variant");
        cmd->add_option("--seed", opts.seed, "run seed");
    };

    auto* generate = app.add_subcommand("generate", "render synthetic clips to a dataset directory");
    add_common(generate, false);
    generate->add_option("--count", count, "number of clips");
    generate->add_option("--out", out, "output directory")->required();

    auto* train_cmd = app.add_subcommand("train", "train one variant and write a run directory");
    add_common(train_cmd);
    train_cmd->add_option("--out", out, "run directory")->required();

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the eval split");
    add_common(eval_cmd);
    eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint archive")->required();
    eval_cmd->add_option("--out", out, "optional output directory");

    auto* ablate = app.add_subcommand("ablate", "train the study variants over seeds and compare");
    add_common(ablate, false);
    ablate->add_option("--seeds", seeds_csv, "comma-separated seeds")->required();
    ablate->add_option("--variants", variants_csv, "comma-separated variant subset");
    ablate->add_option("--workers", workers, "parallel runs (0 = hardware)");
    ablate->add_option("--out", out, "output directory")->required();

    auto* verify = app.add_subcommand("verify", "run the built-in verification battery");
    verify->add_option("--filter", filter, "run only checks whose name contains this substring");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (const char* checked = std::getenv("TDMI_CHECKED"); checked && std::string(checked) == "1")
        set_checked_mode(true);

    try {
        if (generate->parsed()) return cmd_generate(opts, count, out);
        if (train_cmd->parsed()) return cmd_train(opts, out);
        if (eval_cmd->parsed()) return cmd_eval(opts, checkpoint, out);
        if (ablate->parsed()) return cmd_ablate(opts, seeds_csv, variants_csv, workers, out);
        if (verify->parsed()) return cmd_verify(filter);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
