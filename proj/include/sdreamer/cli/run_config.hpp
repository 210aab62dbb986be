#pragma once

#include <string>
#include <vector>

#include "sdreamer/common/keyvalue.hpp"
#include "sdreamer/models/config.hpp"
#include "sdreamer/training/trainer.hpp"

namespace sdreamer::cli {

// Everything a `train` run needs, read from a flat `dotted.key = value`
// file. Sections: model.*, distill.*, optim.*, train.*, data.*, output.*.
struct RunConfig {
    models::ModelConfig model;
    training::TrainConfig train;
    std::string data_dir;
    std::vector<std::string> train_subjects;  // empty: every subject not in test_subjects
    std::vector<std::string> test_subjects;
    std::string out_dir = "run";
    bool samples_per_epoch_set = false;  // otherwise taken from the data's sample rate

    // Canonical form; from_kv(to_kv()) reproduces the config.
    KeyValues to_kv() const;

    // Throws ConfigError listing every unknown key, malformed value and
    // violated constraint, not just the first.
    static RunConfig from_kv(const KeyValues& kv);
};

const std::vector<std::string>& known_keys();

// Resolves `key` against known_keys(): either a full key or an unambiguous
// last component ("alpha" -> "distill.alpha").
std::string resolve_key(const std::string& key);

// Applies `key=value` strings on top of `base` (flags beat the file).
KeyValues apply_overrides(KeyValues base, const std::vector<std::string>& overrides);

}  // namespace sdreamer::cli
