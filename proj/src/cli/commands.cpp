#include "sdreamer/cli/commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <set>

#include "sdreamer/cli/run_config.hpp"
#include "sdreamer/common/error.hpp"
#include "sdreamer/common/log.hpp"
#include "sdreamer/models/checkpoint.hpp"
#include "sdreamer/signal/container.hpp"
#include "sdreamer/signal/synth.hpp"
#include "sdreamer/training/trainer.hpp"

namespace sdreamer::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::vector<fs::path> subject_dirs(const std::string& root, const std::vector<std::string>& wanted) {
    if (!fs::is_directory(root)) throw ConfigError("data directory " + root + " does not exist");
    if (wanted.empty()) {
        auto dirs = signal::list_subjects(root);
        if (dirs.empty()) throw DataError("no subject directories under " + root);
        return dirs;
    }
    std::vector<fs::path> dirs;
    for (const auto& s : wanted) {
        const auto dir = fs::path(root) / s;
        if (!fs::is_directory(dir)) throw ConfigError("subject directory " + dir.string() + " does not exist");
        dirs.push_back(dir);
    }
    return dirs;
}

// A single subject directory, or every subject below a root.
std::vector<fs::path> input_dirs(const std::string& input) {
    if (fs::exists(fs::path(input) / "meta")) return {input};
    if (!fs::is_directory(input)) throw DataError("cannot read input " + input + ": no such directory");
    auto dirs = signal::list_subjects(input);
    if (dirs.empty()) throw DataError("cannot read input " + input + ": no signal container found");
    return dirs;
}

training::EpochDataset load_dataset(const std::vector<fs::path>& dirs, const models::ModelConfig& model) {
    const auto records = signal::load_records(dirs, signal::thread_limit());
    auto data = training::EpochDataset::from_records(records, model.patch_width);
    if (data.sample_rate_hz != model.samples_per_epoch) {
        throw DataError("data sample rate " + std::to_string(data.sample_rate_hz) + " Hz does not match the model's " +
                        std::to_string(model.samples_per_epoch) + " samples per epoch");
    }
    return data;
}

ordered_json report_json(const training::EvalReport& r) { return ordered_json::parse(r.to_json()); }

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream file(path, std::ios::trunc);
    if (!file) throw DataError("cannot write " + path.string());
    file << text;
}

std::string subject_names(const std::vector<fs::path>& dirs) {
    std::string out;
    for (const auto& d : dirs) out += (out.empty() ? "" : ",") + d.filename().string();
    return out;
}

int cmd_synth(std::size_t subjects, std::size_t seconds, std::uint64_t seed, const std::string& out_dir,
              std::size_t sample_rate, const std::vector<double>& transition, double unlabeled_rate,
              std::ostream& out) {
    signal::SynthConfig cfg;
    cfg.sample_rate_hz = sample_rate;
    cfg.unlabeled_rate = unlabeled_rate;
    if (!transition.empty()) cfg.transition = signal::parse_transition_matrix(transition);
    const auto records = signal::synth_generate(subjects, seconds, seed, cfg);
    fs::create_directories(out_dir);
    for (const auto& r : records) signal::save_record(r, fs::path(out_dir) / r.subject_id);
    out << ordered_json{{"out_dir", out_dir}, {"subjects", records.size()}, {"seconds", seconds}}.dump() << '\n';
    return kExitOk;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides, std::ostream& out,
              std::ostream& err) {
    if (!fs::exists(config_path)) throw ConfigError("config file " + config_path + " does not exist");
    auto run = RunConfig::from_kv(apply_overrides(KeyValues::load(config_path), overrides));

    // Resolve the split before loading anything so config faults surface first.
    std::vector<fs::path> test_dirs;
    if (!run.test_subjects.empty()) test_dirs = subject_dirs(run.data_dir, run.test_subjects);
    std::vector<fs::path> train_dirs;
    if (run.train_subjects.empty()) {
        const std::set<std::string> held(run.test_subjects.begin(), run.test_subjects.end());
        for (const auto& d : subject_dirs(run.data_dir, {})) {
            if (!held.count(d.filename().string())) train_dirs.push_back(d);
        }
        if (train_dirs.empty()) throw DataError("training split is empty: every subject is held out");
    } else {
        train_dirs = subject_dirs(run.data_dir, run.train_subjects);
    }

    const auto first = signal::load_record(train_dirs.front());
    if (!run.samples_per_epoch_set) run.model.samples_per_epoch = first.sample_rate_hz;
    run.model.validate();
    const auto train_data = load_dataset(train_dirs, run.model);
    const auto test_data = test_dirs.empty() ? training::EpochDataset{} : load_dataset(test_dirs, run.model);
    run.train_subjects.clear();
    for (const auto& d : train_dirs) run.train_subjects.push_back(d.filename().string());

    fs::create_directories(run.out_dir);
    const fs::path dir(run.out_dir);
    auto cfg = run.train;
    cfg.log_path = (dir / "train_log.ndjson").string();
    cfg.checkpoint_path = (dir / "model.ckpt").string();
    cfg.config_echo = run.to_kv();
    write_text(dir / "config.txt", cfg.config_echo.format());

    auto model = models::make_model(run.model, cfg.seed);
    err << "training " << models::to_string(run.model.kind) << " model on " << train_data.size() << " epochs ("
        << subject_names(train_dirs) << ")\n";
    const auto result = training::train(*model, train_data, test_dirs.empty() ? nullptr : &test_data, cfg,
                                        [&](const training::StepRecord& s) {
                                            if (s.step % 10 == 0 || s.step == 1) {
                                                err << "step " << s.step << " loss " << s.loss.total << '\n';
                                            }
                                            return false;
                                        });

    ordered_json report;
    report["steps_run"] = result.steps_run;
    report["target_step"] = result.target_step ? ordered_json(*result.target_step) : ordered_json(nullptr);
    report["checkpoint"] = cfg.checkpoint_path;
    if (!result.steps.empty()) report["final_loss"] = ordered_json::parse(training::to_json(result.steps.back(), false));
    if (!test_dirs.empty()) {
        for (const auto mode : {models::PathwayMode::Mix, models::PathwayMode::Eeg, models::PathwayMode::Emg}) {
            report["test"][models::to_string(mode)] = report_json(training::evaluate(*model, test_data, mode));
        }
    }
    write_text(dir / "report.json", report.dump(2) + "\n");
    out << report.dump() << '\n';
    return kExitOk;
}

int cmd_eval(const std::string& checkpoint, const std::string& data_dir, const std::vector<std::string>& subjects,
             const std::string& pathway, const std::string& output, std::ostream& out) {
    const auto mode = models::parse_pathway_mode(pathway);
    const auto loaded = models::load_checkpoint(checkpoint);
    const auto data = load_dataset(subject_dirs(data_dir, subjects), loaded.model->config());
    const auto report = report_json(training::evaluate(*loaded.model, data, mode));
    if (!output.empty()) write_text(output, report.dump(2) + "\n");
    out << report.dump() << '\n';
    return kExitOk;
}

int cmd_infer(const std::string& checkpoint, const std::string& input, const std::string& pathway,
              bool embeddings, const std::string& output, std::ostream& out, std::ostream& err) {
    const auto mode = models::parse_pathway_mode(pathway);
    const auto loaded = models::load_checkpoint(checkpoint);
    const auto data = load_dataset(input_dirs(input), loaded.model->config());
    const auto preds = training::predict(*loaded.model, data, mode, 256, embeddings);

    std::ofstream file;
    if (!output.empty()) {
        file.open(output, std::ios::trunc);
        if (!file) throw DataError("cannot write " + output);
    }
    std::ostream& sink = output.empty() ? out : file;
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!preds[i]) {
            ++skipped;
            continue;
        }
        const auto& p = *preds[i];
        ordered_json j;
        j["subject"] = data.subjects[i];
        j["index"] = data.positions[i];
        j["label"] = std::string(1, stage_code(p.label));
        j["probs"] = p.probs;
        j["pathway"] = mome::to_string(p.pathway);
        if (embeddings) j["embedding"] = p.embedding;
        sink << j.dump() << '\n';
    }
    if (skipped != 0) err << "warning: " << skipped << " epochs lie in runs shorter than K and have no prediction\n";
    return kExitOk;
}

int cmd_inspect(const std::string& checkpoint, std::ostream& out) {
    const auto loaded = models::load_checkpoint(checkpoint);
    std::size_t scalars = 0;
    ordered_json tensors = ordered_json::array();
    for (const auto& [name, value] : loaded.model->parameters()) {
        scalars += value.size();
        tensors.push_back({{"name", name}, {"shape", value.shape()}});
    }
    ordered_json j;
    j["version"] = loaded.version;
    j["kind"] = models::to_string(loaded.model->kind());
    j["step"] = loaded.meta.step;
    j["parameters"] = scalars;
    ordered_json config = ordered_json::object();
    for (const auto& [key, value] : loaded.meta.config.entries()) {
        if (key != "state.rng") config[key] = value;
    }
    j["config"] = config;
    j["tensors"] = tensors;
    out << j.dump(2) << '\n';
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"sDREAMER sleep staging: synthesize data, train, evaluate and run inference"};
    app.require_subcommand(1);

    std::size_t subjects = 4, seconds = 600, sample_rate = 512;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::vector<double> transition;
    double unlabeled_rate = 0.0;
    auto* synth = app.add_subcommand("synth", "Write synthetic subjects in the container format");
    synth->add_option("--subjects", subjects, "Number of subjects")->check(CLI::PositiveNumber);
    synth->add_option("--seconds", seconds, "Seconds per subject")->check(CLI::PositiveNumber);
    synth->add_option("--seed", seed, "Generator seed");
    synth->add_option("--out-dir", out_dir, "Output directory")->required();
    synth->add_option("--sample-rate", sample_rate, "Samples per second")->check(CLI::PositiveNumber);
    synth->add_option("--transition", transition, "Nine row-major transition probabilities")->delimiter(',');
    synth->add_option("--unlabeled-rate", unlabeled_rate, "Probability a second is unscored");

    std::string config_path;
    std::vector<std::string> overrides;
    auto* train = app.add_subcommand("train", "Train a model from a run config");
    train->add_option("--config", config_path, "Run config file")->required();
    train->add_option("--override", overrides, "key=value, applied over the config file")->take_all();

    std::string checkpoint, data_dir, pathway = "auto", output;
    std::vector<std::string> eval_subjects;
    auto* eval = app.add_subcommand("eval", "Score a checkpoint on labeled data");
    eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    eval->add_option("--data", data_dir, "Data directory")->required();
    eval->add_option("--subjects", eval_subjects, "Subjects to score (default: all)")->delimiter(',');
    eval->add_option("--pathway", pathway, "auto | eeg | emg | mix");
    eval->add_option("--output", output, "Also write the report here");

    std::string input;
    bool embeddings = false;
    auto* infer = app.add_subcommand("infer", "Per-second predictions as NDJSON");
    infer->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    infer->add_option("--input", input, "Subject container or a directory of them")->required();
    infer->add_option("--pathway", pathway, "auto | eeg | emg | mix");
    infer->add_flag("--emit-embeddings", embeddings, "Include the head input of the chosen pathway");
    infer->add_option("--output", output, "Write records here instead of stdout");

    auto* inspect = app.add_subcommand("inspect", "Print checkpoint metadata");
    inspect->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kExitOk;
        }
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    set_warning_sink([&err](const std::string& m) { err << "warning: " << m << '\n'; });
    int code = kExitOk;
    try {
        if (*synth) code = cmd_synth(subjects, seconds, seed, out_dir, sample_rate, transition, unlabeled_rate, out);
        if (*train) code = cmd_train(config_path, overrides, out, err);
        if (*eval) code = cmd_eval(checkpoint, data_dir, eval_subjects, pathway, output, out);
        if (*infer) code = cmd_infer(checkpoint, input, pathway, embeddings, output, out, err);
        if (*inspect) code = cmd_inspect(checkpoint, out);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        code = kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        code = kExitFailure;
    }
    set_warning_sink({});
    return code;
}

}  // namespace sdreamer::cli
