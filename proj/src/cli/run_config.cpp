#include "sdreamer/cli/run_config.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "sdreamer/common/error.hpp"

namespace sdreamer::cli {

namespace {

const std::vector<std::string> kModelKeys{
    "kind",       "dim",        "heads",          "ffn_dim",      "patch_width",        "samples_per_epoch",
    "n_classes",  "activation", "use_pos_encoding", "use_mod_encoding", "dropout",      "layers",
    "mix_start_layer", "epoch_layers", "seq_layers", "seq_mix_start_layer", "seq_len",
};

const std::vector<std::string> kOtherKeys{
    "distill.tau_eeg",       "distill.tau_emg",        "distill.alpha",     "distill.detach_teacher",
    "distill.scale_by_tau_sq", "distill.teacher_first", "distill.sd_eeg_on", "distill.sd_emg_on",
    "optim.lr",              "optim.weight_decay",     "optim.beta1",       "optim.beta2",
    "optim.eps",             "train.steps",            "train.batch_size",  "train.micro_batch",
    "train.eval_interval",   "train.seq_stride",       "train.seed",        "train.target_accuracy",
    "data.dir",              "data.train_subjects",    "data.test_subjects", "output.dir",
};

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
    return out;
}

std::string last_component(const std::string& key) {
    const auto dot = key.rfind('.');
    return dot == std::string::npos ? key : key.substr(dot + 1);
}

// Runs `read` and files its ConfigError (if any) under `problems`.
void collect(std::vector<std::string>& problems, const std::function<void()>& read) {
    try {
        read();
    } catch (const ConfigError& e) {
        std::string text = e.what();
        const std::string header = ":\n  ";
        // Multi-problem messages from nested validators: keep only the items.
        if (const auto at = text.find(header); at != std::string::npos && text.rfind("invalid ", 0) == 0) {
            text = text.substr(at + header.size());
            std::size_t start = 0;
            while (true) {
                const auto next = text.find("\n  ", start);
                problems.push_back(text.substr(start, next - start));
                if (next == std::string::npos) break;
                start = next + 3;
            }
        } else {
            problems.push_back(text);
        }
    }
}

}  // namespace

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& m : kModelKeys) k.push_back("model." + m);
        k.insert(k.end(), kOtherKeys.begin(), kOtherKeys.end());
        return k;
    }();
    return keys;
}

std::string resolve_key(const std::string& key) {
    const auto& keys = known_keys();
    if (std::find(keys.begin(), keys.end(), key) != keys.end()) return key;
    std::vector<std::string> hits;
    for (const auto& k : keys) {
        if (last_component(k) == key) hits.push_back(k);
    }
    if (hits.size() == 1) return hits.front();
    if (hits.empty()) throw ConfigError("unknown config key '" + key + "'");
    throw ConfigError("config key '" + key + "' is ambiguous: " + join(hits));
}

KeyValues apply_overrides(KeyValues base, const std::vector<std::string>& overrides) {
    std::vector<std::string> problems;
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) {
            problems.push_back("override '" + o + "' is not key=value");
            continue;
        }
        collect(problems, [&] { base.set(resolve_key(trim(o.substr(0, eq))), trim(o.substr(eq + 1))); });
    }
    if (!problems.empty()) {
        std::string message = "invalid overrides:";
        for (const auto& p : problems) message += "\n  " + p;
        throw ConfigError(message);
    }
    return base;
}

KeyValues RunConfig::to_kv() const {
    KeyValues kv;
    const auto model_kv = model.to_kv();
    for (const auto& [key, value] : model_kv.entries()) kv.set("model." + key, value);
    const auto& d = train.distill;
    kv.set("distill.tau_eeg", d.tau_eeg);
    kv.set("distill.tau_emg", d.tau_emg);
    kv.set("distill.alpha", d.alpha);
    kv.set("distill.detach_teacher", d.detach_teacher);
    kv.set("distill.scale_by_tau_sq", d.scale_by_tau_sq);
    kv.set("distill.teacher_first", d.teacher_first);
    kv.set("distill.sd_eeg_on", d.sd_eeg_on);
    kv.set("distill.sd_emg_on", d.sd_emg_on);
    kv.set("optim.lr", train.optim.lr);
    kv.set("optim.weight_decay", train.optim.weight_decay);
    kv.set("optim.beta1", train.optim.beta1);
    kv.set("optim.beta2", train.optim.beta2);
    kv.set("optim.eps", train.optim.eps);
    kv.set("train.steps", train.steps);
    kv.set("train.batch_size", train.batch_size);
    kv.set("train.micro_batch", train.micro_batch);
    kv.set("train.eval_interval", train.eval_interval);
    kv.set("train.seq_stride", train.seq_stride);
    kv.set("train.seed", static_cast<std::int64_t>(train.seed));
    if (train.target_accuracy) kv.set("train.target_accuracy", *train.target_accuracy);
    kv.set("data.dir", data_dir);
    kv.set("data.train_subjects", join(train_subjects));
    kv.set("data.test_subjects", join(test_subjects));
    kv.set("output.dir", out_dir);
    return kv;
}

RunConfig RunConfig::from_kv(const KeyValues& kv) {
    std::vector<std::string> problems;
    const auto& keys = known_keys();
    for (const auto& [key, value] : kv.entries()) {
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) problems.push_back("unknown config key '" + key + "'");
    }

    RunConfig c;
    const auto model_kv = kv.section("model");
    // Read field by field so one malformed value does not hide the others.
    for (const auto& key : kModelKeys) {
        if (!model_kv.contains(key)) continue;
        KeyValues one;
        one.set("kind", model_kv.get_string("kind", "epoch"));
        one.set(key, *model_kv.get(key));
        collect(problems, [&] { (void)models::ModelConfig::from_kv(one); });
    }
    collect(problems, [&] {
        c.model = models::ModelConfig::from_kv(model_kv);
        c.model.validate();
    });
    c.samples_per_epoch_set = model_kv.contains("samples_per_epoch");
    c.train.dropout = c.model.dropout;
    if (c.model.kind == models::ModelKind::Sequence) c.train.batch_size = 16;

    auto& d = c.train.distill;
    auto& o = c.train.optim;
    auto& t = c.train;
    const auto size_of = [&](const std::string& key, std::size_t& field) {
        collect(problems, [&] {
            const auto v = kv.get_int(key, static_cast<std::int64_t>(field));
            if (v < 0) throw ConfigError(key + " must be non-negative");
            field = static_cast<std::size_t>(v);
        });
    };
    const auto real_of = [&](const std::string& key, double& field) {
        collect(problems, [&] { field = kv.get_double(key, field); });
    };
    const auto flag_of = [&](const std::string& key, bool& field) {
        collect(problems, [&] { field = kv.get_bool(key, field); });
    };
    real_of("distill.tau_eeg", d.tau_eeg);
    real_of("distill.tau_emg", d.tau_emg);
    real_of("distill.alpha", d.alpha);
    flag_of("distill.detach_teacher", d.detach_teacher);
    flag_of("distill.scale_by_tau_sq", d.scale_by_tau_sq);
    flag_of("distill.teacher_first", d.teacher_first);
    flag_of("distill.sd_eeg_on", d.sd_eeg_on);
    flag_of("distill.sd_emg_on", d.sd_emg_on);
    real_of("optim.lr", o.lr);
    real_of("optim.weight_decay", o.weight_decay);
    real_of("optim.beta1", o.beta1);
    real_of("optim.beta2", o.beta2);
    real_of("optim.eps", o.eps);
    size_of("train.steps", t.steps);
    size_of("train.batch_size", t.batch_size);
    size_of("train.micro_batch", t.micro_batch);
    size_of("train.eval_interval", t.eval_interval);
    size_of("train.seq_stride", t.seq_stride);
    collect(problems, [&] {
        const auto v = kv.get_int("train.seed", 0);
        if (v < 0) throw ConfigError("train.seed must be non-negative");
        t.seed = static_cast<std::uint64_t>(v);
    });
    if (kv.contains("train.target_accuracy")) {
        collect(problems, [&] { t.target_accuracy = kv.get_double("train.target_accuracy", 0.0); });
    }
    collect(problems, [&] { t.validate(); });

    c.data_dir = kv.get_string("data.dir", "");
    c.train_subjects = kv.get_list("data.train_subjects");
    c.test_subjects = kv.get_list("data.test_subjects");
    c.out_dir = kv.get_string("output.dir", c.out_dir);
    if (c.data_dir.empty()) problems.push_back("data.dir is required");
    std::set<std::string> seen(c.train_subjects.begin(), c.train_subjects.end());
    for (const auto& s : c.test_subjects) {
        if (seen.count(s)) problems.push_back("subject '" + s + "' is in both data.train_subjects and data.test_subjects");
    }
    if (c.out_dir.empty()) problems.push_back("output.dir must not be empty");

    if (!problems.empty()) {
        // The per-field pass and the whole-model pass can report the same fault.
        std::vector<std::string> unique;
        for (const auto& p : problems) {
            if (std::find(unique.begin(), unique.end(), p) == unique.end()) unique.push_back(p);
        }
        std::string message = "invalid run config:";
        for (const auto& p : unique) message += "\n  " + p;
        throw ConfigError(message);
    }
    return c;
}

}  // namespace sdreamer::cli
