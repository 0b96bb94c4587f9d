#pragma once

#include <string>

#include "tdmi/trainer.hpp"

namespace tdmi {

TrainConfig default_train_config();

// Strict key/value configuration with [data], [model] and [train] sections.
// Unknown sections or keys are rejected. `apply_override` takes dotted keys
// ("train.alpha=0.5") so CLI flags can override file values.
TrainConfig parse_config_text(const std::string& text, const TrainConfig& base);
TrainConfig load_config_file(const std::string& path, const TrainConfig& base);
void apply_override(TrainConfig& cfg, const std::string& dotted_key, const std::string& value);

// Canonical resolved form: every field, fixed order, byte-reproducible.
std::string emit_config(const TrainConfig& cfg);

// FNV-1a hash (hex) of the resolved form.
std::string config_hash(const TrainConfig& cfg);

} // namespace tdmi
