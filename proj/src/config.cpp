#include "tdmi/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace tdmi {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

int to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const int x = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects an integer, got '" + v + "'");
    }
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config: key '" + key + "' expects true/false, got '" + v + "'");
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const std::uint64_t x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects an unsigned integer, got '" + v + "'");
    }
}

std::array<int, 4> to_channels(const std::string& key, const std::string& v) {
    std::array<int, 4> out{};
    std::stringstream ss(v);
    std::string item;
    int i = 0;
    while (std::getline(ss, item, ',')) {
        if (i >= 4) throw ConfigError("config: key '" + key + "' expects 4 comma-separated ints");
        out[static_cast<std::size_t>(i++)] = to_int(key, trim(item));
    }
    if (i != 4) throw ConfigError("config: key '" + key + "' expects 4 comma-separated ints");
    return out;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

using Setter = std::function<void(TrainConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"data.joints", [](TrainConfig& c, const std::string& k, const std::string& v) { c.joints = to_int(k, v); }},
        {"data.delta", [](TrainConfig& c, const std::string& k, const std::string& v) { c.delta = to_int(k, v); }},
        {"data.image_size", [](TrainConfig& c, const std::string& k, const std::string& v) { c.image_size = to_int(k, v); }},
        {"data.n_distractors", [](TrainConfig& c, const std::string& k, const std::string& v) { c.n_distractors = to_int(k, v); }},
        {"data.occlusion_prob", [](TrainConfig& c, const std::string& k, const std::string& v) { c.occlusion_prob = to_double(k, v); }},
        {"data.blur_prob", [](TrainConfig& c, const std::string& k, const std::string& v) { c.blur_prob = to_double(k, v); }},
        {"data.v_max", [](TrainConfig& c, const std::string& k, const std::string& v) { c.v_max = to_double(k, v); }},
        {"data.heatmap_sigma", [](TrainConfig& c, const std::string& k, const std::string& v) { c.heatmap_sigma = to_double(k, v); }},
        {"data.train_clips", [](TrainConfig& c, const std::string& k, const std::string& v) { c.train_clips = to_int(k, v); }},
        {"data.eval_clips", [](TrainConfig& c, const std::string& k, const std::string& v) { c.eval_clips = to_int(k, v); }},
        {"model.channels", [](TrainConfig& c, const std::string& k, const std::string& v) { c.channels = to_channels(k, v); }},
        {"model.cm", [](TrainConfig& c, const std::string& k, const std::string& v) { c.cm = to_int(k, v); }},
        {"model.variant", [](TrainConfig& c, const std::string&, const std::string& v) { c.variant = parse_variant(v); }},
        {"model.stop_grad_mn", [](TrainConfig& c, const std::string& k, const std::string& v) { c.stop_grad_mn = to_bool(k, v); }},
        {"model.critic_hidden", [](TrainConfig& c, const std::string& k, const std::string& v) { c.critic_hidden = to_int(k, v); }},
        {"model.critic_embed", [](TrainConfig& c, const std::string& k, const std::string& v) { c.critic_embed = to_int(k, v); }},
        {"train.alpha", [](TrainConfig& c, const std::string& k, const std::string& v) { c.alpha = to_double(k, v); }},
        {"train.lr", [](TrainConfig& c, const std::string& k, const std::string& v) { c.lr = to_double(k, v); }},
        {"train.iterations", [](TrainConfig& c, const std::string& k, const std::string& v) { c.iterations = to_int(k, v); }},
        {"train.batch_size", [](TrainConfig& c, const std::string& k, const std::string& v) { c.batch_size = to_int(k, v); }},
        {"train.critic_steps", [](TrainConfig& c, const std::string& k, const std::string& v) { c.critic_steps = to_int(k, v); }},
        {"train.critic_lr", [](TrainConfig& c, const std::string& k, const std::string& v) { c.critic_lr = to_double(k, v); }},
        {"train.seed", [](TrainConfig& c, const std::string& k, const std::string& v) { c.seed = to_u64(k, v); }},
        {"train.eval_interval", [](TrainConfig& c, const std::string& k, const std::string& v) { c.eval_interval = to_int(k, v); }},
    };
    return table;
}

} // namespace

TrainConfig default_train_config() { return TrainConfig{}; }

void apply_override(TrainConfig& cfg, const std::string& dotted_key, const std::string& value) {
    auto it = setters().find(dotted_key);
    if (it == setters().end()) throw ConfigError("config: unknown key '" + dotted_key + "'");
    it->second(cfg, dotted_key, trim(value));
}

TrainConfig parse_config_text(const std::string& text, const TrainConfig& base) {
    TrainConfig cfg = base;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ConfigError("config: malformed section at line " + std::to_string(lineno));
            section = t.substr(1, t.size() - 2);
            if (section != "data" && section != "model" && section != "train")
                throw ConfigError("config: unknown section [" + section + "]");
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected key = value at line " + std::to_string(lineno));
        if (section.empty())
            throw ConfigError("config: key outside of a section at line " + std::to_string(lineno));
        apply_override(cfg, section + "." + trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return cfg;
}

TrainConfig load_config_file(const std::string& path, const TrainConfig& base) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open file " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config_text(ss.str(), base);
}

std::string emit_config(const TrainConfig& c) {
    std::ostringstream os;
    os << "[data]\n";
    os << "joints = " << c.joints << "\n";
    os << "delta = " << c.delta << "\n";
    os << "image_size = " << c.image_size << "\n";
    os << "n_distractors = " << c.n_distractors << "\n";
    os << "occlusion_prob = " << fmt_double(c.occlusion_prob) << "\n";
    os << "blur_prob = " << fmt_double(c.blur_prob) << "\n";
    os << "v_max = " << fmt_double(c.v_max) << "\n";
    os << "heatmap_sigma = " << fmt_double(c.heatmap_sigma) << "\n";
    os << "train_clips = " << c.train_clips << "\n";
    os << "eval_clips = " << c.eval_clips << "\n";
    os << "\n[model]\n";
    os << "channels = " << c.channels[0] << "," << c.channels[1] << "," << c.channels[2] << ","
       << c.channels[3] << "\n";
    os << "cm = " << c.cm << "\n";
    os << "variant = " << variant_name(c.variant) << "\n";
    os << "stop_grad_mn = " << (c.stop_grad_mn ? "true" : "false") << "\n";
    os << "critic_hidden = " << c.critic_hidden << "\n";
    os << "critic_embed = " << c.critic_embed << "\n";
    os << "\n[train]\n";
    os << "alpha = " << fmt_double(c.alpha) << "\n";
    os << "lr = " << fmt_double(c.lr) << "\n";
    os << "iterations = " << c.iterations << "\n";
    os << "batch_size = " << c.batch_size << "\n";
    os << "critic_steps = " << c.critic_steps << "\n";
    os << "critic_lr = " << fmt_double(c.critic_lr) << "\n";
    os << "seed = " << c.seed << "\n";
    os << "eval_interval = " << c.eval_interval << "\n";
    return os.str();
}

std::string config_hash(const TrainConfig& cfg) {
    const std::string text = emit_config(cfg);
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace tdmi
