#include "sdreamer/training/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "sdreamer/common/error.hpp"
#include "sdreamer/common/log.hpp"
#include "sdreamer/models/checkpoint.hpp"
#include "sdreamer/tensor/ops.hpp"

namespace sdreamer::training {

namespace ops = sdreamer::tensor;
using models::ModelKind;
using models::Pathway;

void TrainConfig::validate() const {
    std::vector<std::string> problems;
    if (steps == 0) problems.push_back("train.steps must be positive");
    if (batch_size == 0) problems.push_back("train.batch_size must be positive");
    if (seq_stride == 0) problems.push_back("train.seq_stride must be positive");
    if (dropout < 0.0 || dropout >= 1.0) problems.push_back("train.dropout must lie in [0, 1)");
    if (!(optim.lr >= 0.0)) problems.push_back("optim.lr must be non-negative");
    if (!(optim.weight_decay >= 0.0)) problems.push_back("optim.weight_decay must be non-negative");
    if (!(optim.beta1 >= 0.0 && optim.beta1 < 1.0)) problems.push_back("optim.beta1 must lie in [0, 1)");
    if (!(optim.beta2 >= 0.0 && optim.beta2 < 1.0)) problems.push_back("optim.beta2 must lie in [0, 1)");
    if (!(optim.eps > 0.0)) problems.push_back("optim.eps must be positive");
    if (!(distill.tau_eeg > 0.0)) problems.push_back("distill.tau_eeg must be positive");
    if (!(distill.tau_emg > 0.0)) problems.push_back("distill.tau_emg must be positive");
    if (!(distill.alpha >= 0.0 && distill.alpha <= 1.0)) problems.push_back("distill.alpha must lie in [0, 1]");
    if (target_accuracy && !(*target_accuracy > 0.0 && *target_accuracy <= 1.0)) {
        problems.push_back("train.target_accuracy must lie in (0, 1]");
    }
    if (!problems.empty()) {
        std::string message = "invalid training config:";
        for (const auto& p : problems) message += "\n  " + p;
        throw ConfigError(message);
    }
}

BatchLoss batch_loss(const models::Model& model, const models::Batch& batch, const DistillConfig& cfg,
                     const mome::ForwardContext* ctx) {
    const models::PathwaySet pathways{cfg.sd_eeg_on, cfg.sd_emg_on, true};
    const auto out = model.forward(batch, pathways, ctx);
    BatchLoss result;
    result.parts.n_labeled = count_labeled(batch.labels);

    const auto ce = ce_loss(out.logits.mix, batch.labels);
    result.parts.ce = ce.item();
    Tensor sd_sum;
    if (cfg.sd_eeg_on) {
        const auto sd = sd_loss(out.logits.eeg, out.logits.mix, cfg.tau_eeg, batch.labels, cfg);
        result.parts.sd_eeg = sd.item();
        sd_sum = sd;
    }
    if (cfg.sd_emg_on) {
        const auto sd = sd_loss(out.logits.emg, out.logits.mix, cfg.tau_emg, batch.labels, cfg);
        result.parts.sd_emg = sd.item();
        sd_sum = sd_sum.defined() ? ops::add(sd_sum, sd) : sd;
    }
    result.total = ops::scale(ce, 1.0 - cfg.alpha);
    if (sd_sum.defined()) result.total = ops::add(result.total, ops::scale(sd_sum, cfg.alpha / 2.0));
    result.parts.total = combine(result.parts.ce, result.parts.sd_eeg, result.parts.sd_emg, cfg.alpha);
    return result;
}

std::string to_json(const StepRecord& r, bool with_wall_time) {
    nlohmann::ordered_json j;
    j["step"] = r.step;
    j["ce"] = r.loss.ce;
    j["sd_eeg"] = r.loss.sd_eeg;
    j["sd_emg"] = r.loss.sd_emg;
    j["total"] = r.loss.total;
    j["n_labeled"] = r.loss.n_labeled;
    j["lr"] = r.lr;
    if (with_wall_time) j["wall_ms"] = r.wall_ms;
    return j.dump();
}

namespace {

std::mt19937_64 make_rng(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x7472u};
    return std::mt19937_64(seq);
}

std::string rng_text(const std::mt19937_64& rng) {
    std::ostringstream os;
    os << rng;
    return os.str();
}

void save(const models::Model& model, const TrainConfig& cfg, std::uint64_t step, const std::mt19937_64& rng) {
    if (cfg.checkpoint_path.empty()) return;
    models::save_checkpoint(cfg.checkpoint_path, model, {cfg.config_echo, step, rng_text(rng)});
}

std::size_t labeled_in(const EpochDataset& data, const std::vector<std::size_t>& units, bool sequence,
                       std::size_t k) {
    std::size_t n = 0;
    for (const auto u : units) {
        const std::size_t len = sequence ? k : 1;
        for (std::size_t j = u; j < u + len; ++j) n += is_labeled(data.labels[j]) ? 1 : 0;
    }
    return n;
}

}  // namespace

TrainResult train(models::Model& model, const EpochDataset& data, const EpochDataset* eval, const TrainConfig& cfg,
                  const StepHook& hook) {
    cfg.validate();
    if (!data.modalities.full()) throw DataError("training needs both EEG and EMG channels");
    const bool sequence = model.kind() == ModelKind::Sequence;
    const std::size_t k = model.config().seq_len;

    std::vector<std::size_t> units;
    if (sequence) {
        units = signal::sequence_windows(data.skeleton(), k, cfg.seq_stride);
    } else {
        units.resize(data.size());
        std::iota(units.begin(), units.end(), std::size_t{0});
    }
    if (units.empty()) throw DataError("training split is empty");

    auto rng = make_rng(cfg.seed);
    std::vector<std::size_t> order = units;
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t cursor = 0;

    AdamW optimizer(model.parameters(), cfg.optim);
    const mome::ForwardContext ctx{cfg.dropout, &rng};
    std::ofstream log;
    if (!cfg.log_path.empty()) {
        log.open(cfg.log_path, std::ios::trunc);
        if (!log) throw DataError("cannot write training log " + cfg.log_path);
    }

    TrainResult result;
    const std::size_t per_batch = std::min(cfg.batch_size, units.size());
    const std::size_t micro = cfg.micro_batch == 0 ? per_batch : cfg.micro_batch;
    for (std::uint64_t step = 1; step <= cfg.steps; ++step) {
        const auto started = std::chrono::steady_clock::now();
        std::vector<std::size_t> picked;
        picked.reserve(per_batch);
        while (picked.size() < per_batch) {
            if (cursor == order.size()) {
                std::shuffle(order.begin(), order.end(), rng);
                cursor = 0;
            }
            picked.push_back(order[cursor++]);
        }

        StepRecord record;
        record.step = step;
        record.lr = cfg.optim.lr;
        const std::size_t labeled = labeled_in(data, picked, sequence, k);
        optimizer.zero_grad();
        if (labeled == 0) {
            warn("step " + std::to_string(step) + ": batch has no labeled samples, skipped");
        } else {
            for (std::size_t begin = 0; begin < picked.size(); begin += micro) {
                const std::vector<std::size_t> chunk(picked.begin() + static_cast<long>(begin),
                                                     picked.begin() + static_cast<long>(std::min(begin + micro, picked.size())));
                const auto batch = sequence ? sequence_batch(data, chunk, k, data.modalities)
                                            : epoch_batch(data, chunk, data.modalities);
                const std::size_t n = count_labeled(batch.labels);
                if (n == 0) continue;
                const double weight = static_cast<double>(n) / static_cast<double>(labeled);
                tensor::Tape tape;
                Tensor scaled;
                BatchLoss loss;
                {
                    tensor::TapeScope scope(tape);
                    loss = batch_loss(model, batch, cfg.distill, &ctx);
                    scaled = ops::scale(loss.total, weight);
                }
                if (!std::isfinite(loss.parts.total)) {
                    save(model, cfg, step - 1, rng);
                    throw NumericError("non-finite loss at step " + std::to_string(step));
                }
                tape.backward(scaled);
                record.loss.ce += weight * loss.parts.ce;
                record.loss.sd_eeg += weight * loss.parts.sd_eeg;
                record.loss.sd_emg += weight * loss.parts.sd_emg;
            }
            record.loss.n_labeled = labeled;
            record.loss.total = combine(record.loss.ce, record.loss.sd_eeg, record.loss.sd_emg, cfg.distill.alpha);
            try {
                optimizer.step();
            } catch (const NumericError&) {
                save(model, cfg, step - 1, rng);
                throw;
            }
        }
        record.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
        result.steps.push_back(record);
        result.steps_run = step;
        if (log) log << to_json(record, cfg.log_wall_time) << '\n' << std::flush;

        bool stop = hook && hook(record);
        const bool due = step == cfg.steps || stop || (cfg.eval_interval != 0 && step % cfg.eval_interval == 0);
        if (eval != nullptr && due) {
            auto report = evaluate(model, *eval, models::PathwayMode::Mix);
            if (log) {
                log << R"({"step":)" << step << R"(,"eval":)" << nlohmann::json::parse(report.to_json()).dump()
                    << "}\n"
                    << std::flush;
            }
            if (cfg.target_accuracy && report.accuracy >= *cfg.target_accuracy && !result.target_step) {
                result.target_step = step;
                stop = true;
            }
            result.evals.push_back({step, std::move(report)});
        }
        if (stop) break;
    }
    save(model, cfg, result.steps_run, rng);
    return result;
}

std::vector<std::optional<models::Prediction>> predict(const models::Model& model, const EpochDataset& data,
                                                       models::PathwayMode mode, std::size_t batch_size,
                                                       bool with_embeddings) {
    const auto pathway = models::select_pathway(mode, data.modalities);
    ModalitySet use{pathway != Pathway::Emg, pathway != Pathway::Eeg};
    const auto forced = pathway == Pathway::Eeg   ? models::PathwayMode::Eeg
                        : pathway == Pathway::Emg ? models::PathwayMode::Emg
                                                  : models::PathwayMode::Mix;
    batch_size = std::max<std::size_t>(1, batch_size);
    std::vector<std::optional<models::Prediction>> out(data.size());

    if (model.kind() == ModelKind::Sequence) {
        const std::size_t k = model.config().seq_len;
        const auto windows = signal::tiling_windows(data.skeleton(), k);
        const std::size_t per = std::max<std::size_t>(1, batch_size / k);
        for (std::size_t b = 0; b < windows.size(); b += per) {
            std::vector<std::size_t> starts;
            for (std::size_t i = b; i < std::min(b + per, windows.size()); ++i) starts.push_back(windows[i].start);
            auto preds = models::infer(model, sequence_batch(data, starts, k, use), forced, with_embeddings);
            for (std::size_t i = 0; i < starts.size(); ++i) {
                const auto& w = windows[b + i];
                for (std::size_t j = w.first_new; j < k; ++j) out[w.start + j] = std::move(preds[i * k + j]);
            }
        }
    } else {
        for (std::size_t b = 0; b < data.size(); b += batch_size) {
            std::vector<std::size_t> idx(std::min(batch_size, data.size() - b));
            std::iota(idx.begin(), idx.end(), b);
            auto preds = models::infer(model, epoch_batch(data, idx, use), forced, with_embeddings);
            for (std::size_t i = 0; i < idx.size(); ++i) out[idx[i]] = std::move(preds[i]);
        }
    }
    return out;
}

EvalReport evaluate(const models::Model& model, const EpochDataset& data, models::PathwayMode mode,
                    std::size_t batch_size) {
    const auto pathway = models::select_pathway(mode, data.modalities);
    const auto predicted = predict(model, data, mode, batch_size);
    std::vector<Stage> truth;
    std::vector<Stage> pred;
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!predicted[i]) {
            skipped += is_labeled(data.labels[i]) ? 1 : 0;
            continue;
        }
        truth.push_back(data.labels[i]);
        pred.push_back(predicted[i]->label);
    }
    if (skipped != 0) warn(std::to_string(skipped) + " labeled epochs lie in runs shorter than K and were not scored");
    auto report = evaluate_predictions(pred, truth);
    report.pathway = std::string(mome::to_string(pathway));
    return report;
}

}  // namespace sdreamer::training
