#pragma once

#include <cmath>
#include <map>
#include <string>

#include "tdmi/checkpoint.hpp"
#include "tdmi/rng.hpp"
#include "tdmi/tensor.hpp"

namespace tdmi {

// Named registry of trainable tensors. Iteration order is the lexicographic
// name order (std::map), which fixes optimizer-update and checkpoint order
// for deterministic runs.
template <typename T>
class ParamStore {
public:
    Tensor<T> add(const std::string& name, Tensor<T> t) {
        t.set_requires_grad(true);
        auto [it, inserted] = map_.emplace(name, t);
        if (!inserted) throw ContractError("duplicate parameter name: " + name);
        return it->second;
    }

    bool has(const std::string& name) const { return map_.count(name) != 0; }

    const Tensor<T>& at(const std::string& name) const {
        auto it = map_.find(name);
        if (it == map_.end()) throw ContractError("unknown parameter: " + name);
        return it->second;
    }

    std::size_t size() const { return map_.size(); }
    auto begin() const { return map_.begin(); }
    auto end() const { return map_.end(); }

    void zero_grad() {
        for (auto& [name, t] : map_) {
            (void)name;
            const_cast<Tensor<T>&>(t).zero_grad();
        }
    }

    std::int64_t total_elements() const {
        std::int64_t n = 0;
        for (const auto& [name, t] : map_) {
            (void)name;
            n += t.size();
        }
        return n;
    }

    Archive to_archive() const {
        Archive a;
        for (const auto& [name, t] : map_) a.emplace(name, to_entry(t));
        return a;
    }

    // Loads values for every registered parameter; throws if one is missing
    // or has the wrong shape. Extra archive entries are ignored.
    void load_archive(const Archive& a) {
        for (auto& [name, t] : map_) {
            auto it = a.find(name);
            if (it == a.end()) throw ContractError("archive is missing parameter: " + name);
            load_entry(it->second, const_cast<Tensor<T>&>(t));
        }
    }

private:
    std::map<std::string, Tensor<T>> map_;
};

// Uniform fan-in initialization; biases start at zero. The prefactor makes
// the layer gain ~1 under the leaky-ReLU activation (sqrt(3) converts the
// target std into a uniform bound, sqrt(2/(1+slope^2)) compensates the
// activation); without it, activations of the deeper paths collapse toward
// the activation kink and both training signals and finite-difference
// gradient probes degrade.
template <typename T>
Tensor<T> init_uniform_fan_in(Rng& rng, Shape shape, int fan_in) {
    Tensor<T> t(shape);
    const double gain = std::sqrt(2.0 / (1.0 + 0.1 * 0.1));
    const double bound = std::sqrt(3.0) * gain / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : t.values()) v = static_cast<T>(rng.uniform(-bound, bound));
    return t;
}

template <typename T>
Tensor<T> init_conv_weight(Rng& rng, int co, int ci, int kh, int kw) {
    return init_uniform_fan_in<T>(rng, Shape{co, ci, kh, kw}, ci * kh * kw);
}

// Linear weights are stored [in, out]: y = x * W + b for row vectors x.
template <typename T>
Tensor<T> init_linear_weight(Rng& rng, int in, int out) {
    return init_uniform_fan_in<T>(rng, Shape{in, out}, in);
}

} // namespace tdmi
