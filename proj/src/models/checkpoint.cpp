#include "sdreamer/models/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <set>

#include "sdreamer/common/error.hpp"

namespace sdreamer::models {

namespace {

constexpr char kMagic[4] = {'S', 'D', 'R', 'M'};

template <typename T>
void put(std::string& out, T value) {
    static_assert(std::is_unsigned_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

class Reader {
public:
    Reader(const std::string& bytes, const std::string& path) : bytes_(bytes), path_(path) {}

    template <typename T>
    T get(const char* what) {
        need(sizeof(T), what);
        T value = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            value |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += sizeof(T);
        return value;
    }

    std::string text(std::uint64_t n, const char* what) {
        need(n, what);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    bool done() const { return pos_ == bytes_.size(); }
    std::size_t offset() const { return pos_; }

    [[noreturn]] void fail(const std::string& what) const {
        throw CheckpointError(path_ + " @" + std::to_string(pos_) + ": " + what);
    }

private:
    void need(std::uint64_t n, const char* what) const {
        if (n > bytes_.size() - pos_) fail(std::string("corrupt or truncated checkpoint (reading ") + what + ")");
    }

    const std::string& bytes_;
    const std::string& path_;
    std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::string& path, const Model& model, const CheckpointMeta& meta) {
    KeyValues config = meta.config;
    const auto model_kv = model.config().to_kv();
    for (const auto& [key, value] : model_kv.entries()) config.set("model." + key, value);
    config.set("state.step", static_cast<std::int64_t>(meta.step));
    if (!meta.rng_state.empty()) config.set("state.rng", meta.rng_state);
    const auto text = config.format();

    std::string out(kMagic, 4);
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint64_t>(out, text.size());
    out += text;
    for (const auto& [name, value] : model.parameters()) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out += name;
        put<std::uint32_t>(out, static_cast<std::uint32_t>(value.rank()));
        for (const auto d : value.shape()) put<std::uint64_t>(out, d);
        for (const double v : value.data()) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    }

    const auto tmp = path + ".tmp";
    {
        std::ofstream file(tmp, std::ios::binary | std::ios::trunc);
        if (!file) throw CheckpointError("cannot write checkpoint " + path);
        file.write(out.data(), static_cast<std::streamsize>(out.size()));
        if (!file) throw CheckpointError("failed writing checkpoint " + path);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw CheckpointError("cannot move checkpoint into " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw CheckpointError("cannot open checkpoint " + path);
    const std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());

    Reader in(bytes, path);
    if (in.text(4, "magic") != std::string(kMagic, 4)) throw CheckpointError(path + ": not a checkpoint (bad magic)");
    LoadedCheckpoint result;
    result.version = in.get<std::uint32_t>("version");
    if (result.version != kCheckpointVersion) {
        throw CheckpointError(path + ": unsupported checkpoint version " + std::to_string(result.version) +
                              " (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    const auto config_len = in.get<std::uint64_t>("config length");
    auto config = KeyValues::parse(in.text(config_len, "config block"), path + " config");

    const auto model_config = ModelConfig::from_kv(config.section("model"));
    result.model = make_model(model_config, 0);
    std::map<std::string, Tensor> params;
    for (const auto& [name, value] : result.model->parameters()) params.emplace(name, value);

    std::set<std::string> seen;
    while (!in.done()) {
        const auto name_len = in.get<std::uint32_t>("name length");
        const auto name = in.text(name_len, "parameter name");
        const auto rank = in.get<std::uint32_t>("rank");
        if (rank == 0 || rank > 8) in.fail("implausible rank " + std::to_string(rank) + " for " + name);
        tensor::Shape shape(rank);
        for (auto& d : shape) d = in.get<std::uint64_t>("dims");
        const auto it = params.find(name);
        if (it == params.end()) in.fail("unknown parameter '" + name + "' for this model config");
        if (it->second.shape() != shape) {
            in.fail("parameter '" + name + "' has shape " + tensor::to_string(shape) + " but the config implies " +
                    tensor::to_string(it->second.shape()));
        }
        if (!seen.insert(name).second) in.fail("duplicate parameter '" + name + "'");
        auto dst = it->second.data();
        for (auto& v : dst) v = std::bit_cast<double>(in.get<std::uint64_t>("payload"));
    }
    for (const auto& [name, value] : params) {
        if (!seen.count(name)) throw CheckpointError(path + ": missing parameter '" + name + "'");
    }

    result.meta.step = static_cast<std::uint64_t>(config.get_int("state.step", 0));
    result.meta.rng_state = config.get_string("state.rng", "");
    result.meta.config = std::move(config);
    return result;
}

void copy_parameters(const Model& from, const Model& to) {
    const auto src = from.parameters();
    const auto dst = to.parameters();
    if (src.size() != dst.size()) throw ShapeError("models have different parameter sets");
    for (std::size_t i = 0; i < src.size(); ++i) {
        if (src[i].name != dst[i].name || src[i].value.shape() != dst[i].value.shape()) {
            throw ShapeError("parameter mismatch at '" + src[i].name + "'");
        }
        Tensor target = dst[i].value;
        const auto s = src[i].value.data();
        std::copy(s.begin(), s.end(), target.data().begin());
    }
}

}  // namespace sdreamer::models
