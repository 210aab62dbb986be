#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "sdreamer/common/keyvalue.hpp"
#include "sdreamer/models/model.hpp"

namespace sdreamer::models {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Everything a checkpoint carries besides the parameters. `config` holds the
// run configuration echo; model.* keys are always rewritten from the model.
struct CheckpointMeta {
    KeyValues config;
    std::uint64_t step = 0;
    std::string rng_state;  // textual std::mt19937_64 state, may be empty
};

struct LoadedCheckpoint {
    std::unique_ptr<Model> model;
    CheckpointMeta meta;
    std::uint32_t version = 0;
};

// Layout: "SDRM", u32 version, u64 config length, config text, then one
// record per parameter: u32 name length, name, u32 rank, u64 dims[rank],
// f64 payload. All integers and floats little-endian.
void save_checkpoint(const std::string& path, const Model& model, const CheckpointMeta& meta);
LoadedCheckpoint load_checkpoint(const std::string& path);

// Parameters into an existing model of matching architecture.
void copy_parameters(const Model& from, const Model& to);

}  // namespace sdreamer::models
