#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sdreamer/common/keyvalue.hpp"
#include "sdreamer/models/inference.hpp"
#include "sdreamer/models/model.hpp"
#include "sdreamer/training/dataset.hpp"
#include "sdreamer/training/losses.hpp"
#include "sdreamer/training/metrics.hpp"
#include "sdreamer/training/optim.hpp"

namespace sdreamer::training {

struct TrainConfig {
    std::size_t steps = 2000;
    std::size_t batch_size = 256;  // epochs (epoch model) or sequences (sequence model)
    std::size_t micro_batch = 64;  // forward/backward chunk; 0 runs the whole batch at once
    std::size_t eval_interval = 100;  // 0: evaluate only at the end
    std::size_t seq_stride = 1;
    double dropout = 0.0;
    AdamWConfig optim;
    DistillConfig distill;
    std::uint64_t seed = 0;
    // Stop after the first evaluation whose MIX accuracy reaches this value.
    std::optional<double> target_accuracy;
    std::string log_path;         // NDJSON training log, empty for none
    std::string checkpoint_path;  // written at the end and on a numeric abort
    bool log_wall_time = true;
    KeyValues config_echo;  // stored in checkpoints written by train()

    void validate() const;  // throws ConfigError listing every problem
};

struct StepRecord {
    std::uint64_t step = 0;
    LossBreakdown loss;
    double lr = 0.0;
    double wall_ms = 0.0;
};

struct EvalRecord {
    std::uint64_t step = 0;
    EvalReport mix;
};

struct TrainResult {
    std::vector<StepRecord> steps;
    std::vector<EvalRecord> evals;
    std::optional<std::uint64_t> target_step;  // first evaluated step meeting target_accuracy
    std::uint64_t steps_run = 0;
};

// Loss of one (micro-)batch. `total` carries the graph when a tape is active.
struct BatchLoss {
    tensor::Tensor total;
    LossBreakdown parts;
};

// CE on the MIX logits plus whichever distillation terms are enabled.
// Disabled terms are reported as 0.
BatchLoss batch_loss(const models::Model& model, const models::Batch& batch, const DistillConfig& cfg,
                     const mome::ForwardContext* ctx = nullptr);

// Optional hook run after every step; returning true stops training.
using StepHook = std::function<bool(const StepRecord&)>;

// Deterministic for a fixed seed: sample order, dropout masks and updates.
// `eval` may be null. Throws NumericError on a non-finite loss or gradient
// (after writing checkpoint_path from the last good parameters, if set).
TrainResult train(models::Model& model, const EpochDataset& data, const EpochDataset* eval, const TrainConfig& cfg,
                  const StepHook& hook = {});

// One prediction per epoch of `data`, in order. Sequence models tile each
// run with K-long windows; epochs in runs shorter than K stay empty.
std::vector<std::optional<models::Prediction>> predict(const models::Model& model, const EpochDataset& data,
                                                       models::PathwayMode mode, std::size_t batch_size = 256,
                                                       bool with_embeddings = false);

// Every labeled epoch of `data` is predicted exactly once. Sequence models
// tile each run with K-long windows.
EvalReport evaluate(const models::Model& model, const EpochDataset& data, models::PathwayMode mode,
                    std::size_t batch_size = 256);

// Structured record of one step, as written to the training log.
std::string to_json(const StepRecord& record, bool with_wall_time = true);

}  // namespace sdreamer::training
