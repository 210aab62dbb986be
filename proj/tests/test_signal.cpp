#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstring>
#include <fstream>

#include "sdreamer/common/error.hpp"
#include "sdreamer/common/log.hpp"
#include "sdreamer/signal/container.hpp"
#include "sdreamer/signal/preprocess.hpp"
#include "sdreamer/signal/synth.hpp"
#include "support/tempdir.hpp"

using namespace sdreamer;
using namespace sdreamer::signal;
using sdreamer::testing::TempDir;

namespace {

SignalRecord ramp_record(const std::string& id, std::size_t rate, std::size_t seconds, std::string labels) {
    SignalRecord r;
    r.subject_id = id;
    r.sample_rate_hz = rate;
    for (std::size_t i = 0; i < rate * seconds; ++i) {
        r.eeg.push_back(std::sin(0.3 * static_cast<double>(i)) + 0.01 * static_cast<double>(i));
        r.emg.push_back(std::cos(0.7 * static_cast<double>(i)));
    }
    for (const char c : labels) r.labels.push_back(*stage_from_code(c));
    return r;
}

void write_floats(const std::filesystem::path& path, std::size_t count) {
    std::ofstream out(path, std::ios::binary);
    for (std::size_t i = 0; i < count; ++i) {
        const float v = static_cast<float>(i) * 0.5f;
        char bytes[4];
        std::memcpy(bytes, &v, 4);
        out.write(bytes, 4);
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

void write_meta(const std::filesystem::path& dir, const std::string& channels, std::size_t rate = 8) {
    write_text(dir / "meta", "subject_id = m01\nsample_rate_hz = " + std::to_string(rate) + "\nchannels = " + channels + "\n");
}

// Warnings are captured for the duration of a test.
struct WarningCapture {
    std::vector<std::string> messages;
    WarningCapture() {
        set_warning_sink([this](const std::string& m) { messages.push_back(m); });
    }
    ~WarningCapture() { set_warning_sink(nullptr); }
};

}  // namespace

TEST_CASE("load_record reads the container format") {
    TempDir dir;
    write_meta(dir.path(), "eeg,emg");
    write_floats(dir / "eeg.f32le", 32);
    write_floats(dir / "emg.f32le", 32);
    write_text(dir / "labels.txt", "WS-R");
    const auto r = load_record(dir.path());
    CHECK(r.subject_id == "m01");
    CHECK(r.sample_rate_hz == 8);
    CHECK(r.eeg.size() == 32);
    CHECK(r.labels.size() == 4);
    CHECK(r.labels[2] == Stage::Unlabeled);
    CHECK(r.labels[3] == Stage::Rem);
    CHECK(r.eeg[3] == 1.5);
}

TEST_CASE("load_record reports malformed input with offsets") {
    TempDir dir;
    write_meta(dir.path(), "eeg,emg");
    write_floats(dir / "eeg.f32le", 33);
    write_floats(dir / "emg.f32le", 32);
    write_text(dir / "labels.txt", "WSWS");
    try {
        (void)load_record(dir.path());
        FAIL("expected a channel-length error");
    } catch (const FormatError& e) {
        CHECK(e.offset() == 128);
    }

    write_floats(dir / "eeg.f32le", 32);
    write_text(dir / "labels.txt", "WSW");
    CHECK_THROWS_AS(load_record(dir.path()), FormatError);

    write_text(dir / "labels.txt", "WSXW");
    try {
        (void)load_record(dir.path());
        FAIL("expected a label error");
    } catch (const FormatError& e) {
        CHECK(e.offset() == 2);
    }

    write_text(dir / "labels.txt", "WSWS");
    std::filesystem::remove(dir / "emg.f32le");
    CHECK_THROWS_AS(load_record(dir.path()), Error);
}

TEST_CASE("single-channel containers load with the other channel absent") {
    TempDir dir;
    write_meta(dir.path(), "emg");
    write_floats(dir / "emg.f32le", 16);
    write_text(dir / "labels.txt", "WW");
    const auto r = load_record(dir.path());
    CHECK(r.eeg.empty());
    CHECK(r.modalities() == ModalitySet::only(Modality::Emg));
}

TEST_CASE("save and load round-trip at float32 precision") {
    TempDir dir;
    auto r = ramp_record("sub", 8, 3, "WS-");
    save_record(r, dir / "sub");
    const auto back = load_record(dir / "sub");
    CHECK(back.subject_id == "sub");
    CHECK(back.labels == r.labels);
    for (std::size_t i = 0; i < r.eeg.size(); ++i) CHECK(back.eeg[i] == static_cast<double>(static_cast<float>(r.eeg[i])));
    CHECK(list_subjects(dir.path()).size() == 1);
    CHECK_THROWS_AS(list_subjects(dir / "missing"), DataError);
    const auto many = load_records({dir / "sub", dir / "sub"}, 2);
    CHECK(many.size() == 2);
}

TEST_CASE("normalize_subject examples") {
    SignalRecord r;
    r.subject_id = "a";
    r.sample_rate_hz = 1;
    r.eeg = {1.0, 3.0};
    r.emg = {0.0, 5.0};
    r.labels = {Stage::Wake, Stage::Sws};
    const auto [n, stats] = normalize_subject(r);
    CHECK(n.eeg == std::vector<double>{-1.0, 1.0});
    CHECK(stats.eeg.mean == 2.0);
    CHECK(stats.eeg.std == 1.0);

    auto again = normalize_subject(n).first;
    for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(again.eeg[i] - n.eeg[i]) <= 1e-12);

    r.emg = {4.0, 4.0};
    CHECK_THROWS_AS(normalize_subject(r), DataError);
}

TEST_CASE("normalization is idempotent on arbitrary traces") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto r = synth_generate(1, 6, seed, SynthConfig{.sample_rate_hz = 64})[0];
        const auto once = normalize_subject(r).first;
        const auto twice = normalize_subject(once).first;
        for (std::size_t i = 0; i < once.eeg.size(); ++i) {
            CHECK(std::abs(once.eeg[i] - twice.eeg[i]) <= 1e-9);
            CHECK(std::abs(once.emg[i] - twice.emg[i]) <= 1e-9);
        }
    }
}

TEST_CASE("slice_epochs examples") {
    const auto ten = slice_epochs(ramp_record("a", 8, 10, "WWWWWWWWWW"));
    REQUIRE(ten.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) CHECK(ten[i].position == i);

    const auto three = slice_epochs(ramp_record("a", 8, 3, "W-R"));
    CHECK(three[1].label == Stage::Unlabeled);
    CHECK(three[2].label == Stage::Rem);

    auto partial = ramp_record("a", 8, 2, "WS");
    partial.eeg.resize(20);
    partial.emg.resize(20);
    const auto epochs = slice_epochs(partial);
    CHECK(epochs.size() == 2);
    CHECK(epochs[1].channel(Modality::Eeg)[0] == partial.eeg[8]);
    CHECK(epochs[1].channel(Modality::Emg)[7] == partial.emg[15]);
}

TEST_CASE("epoch coverage and unlabeled propagation") {
    const auto r = ramp_record("a", 8, 7, "WS-RR-W");
    const auto epochs = slice_epochs(r);
    std::size_t total = 0;
    std::size_t unlabeled = 0;
    for (const auto& e : epochs) {
        total += e.samples;
        unlabeled += e.label == Stage::Unlabeled ? 1 : 0;
    }
    CHECK(total == (r.eeg.size() / 8) * 8);
    CHECK(unlabeled == 2);
    // Each sequence carries the gap only at the gap's own position.
    for (const auto& s : make_sequences(epochs, 3, 1)) {
        for (const auto& e : s.epochs) CHECK((e.label == Stage::Unlabeled) == (r.labels[e.position] == Stage::Unlabeled));
    }
}

TEST_CASE("make_sequences examples") {
    const auto sixteen = slice_epochs(ramp_record("a", 4, 16, std::string(16, 'W')));
    CHECK(make_sequences(sixteen, 16, 16).size() == 1);
    const auto twenty = slice_epochs(ramp_record("a", 4, 20, std::string(20, 'S')));
    const auto windows = make_sequences(twenty, 16, 1);
    CHECK(windows.size() == 5);
    for (const auto& w : windows) {
        for (std::size_t i = 1; i < w.epochs.size(); ++i) {
            CHECK(w.epochs[i].position == w.epochs[i - 1].position + 1);
            CHECK(w.epochs[i].subject_id == w.epochs[0].subject_id);
        }
    }

    auto two = slice_epochs(ramp_record("a", 4, 10, std::string(10, 'W')));
    const auto other = slice_epochs(ramp_record("b", 4, 10, std::string(10, 'W')));
    two.insert(two.end(), other.begin(), other.end());
    WarningCapture capture;
    CHECK(make_sequences(two, 16, 1).empty());
    CHECK(capture.messages.size() == 1);
    CHECK(make_sequences(two, 4, 1).size() == 14);  // never straddles the subject boundary
}

TEST_CASE("tiling windows cover each epoch exactly once") {
    auto epochs = slice_epochs(ramp_record("a", 4, 37, std::string(37, 'W')));
    const auto more = slice_epochs(ramp_record("b", 4, 16, std::string(16, 'W')));
    epochs.insert(epochs.end(), more.begin(), more.end());
    std::vector<int> hits(epochs.size(), 0);
    for (const auto& w : tiling_windows(epochs, 16)) {
        for (std::size_t j = w.first_new; j < 16; ++j) ++hits[w.start + j];
    }
    for (const int h : hits) CHECK(h == 1);
}

TEST_CASE("patch examples and roundtrip") {
    EpochSample e;
    e.samples = 512;
    e.modalities = ModalitySet::both();
    e.signal.resize(1024);
    for (std::size_t i = 0; i < 1024; ++i) e.signal[i] = static_cast<double>(i);

    const auto p16 = patch(e, 16);
    CHECK(p16.patch_count == 32);
    const auto p100 = patch(e, 100);
    CHECK(p100.patch_count == 5);
    CHECK(p100.modality(Modality::Emg).size() == 500);
    CHECK(p100.modality(Modality::Emg)[0] == 512.0);
    CHECK(p100.modality(Modality::Eeg).back() == 499.0);  // trailing 12 samples dropped
    const auto whole = patch(e, 512);
    CHECK(whole.patch_count == 1);
    CHECK(std::equal(whole.modality(Modality::Eeg).begin(), whole.modality(Modality::Eeg).end(), e.signal.begin()));
    CHECK_THROWS_AS(patch(e, 513), ShapeError);
    CHECK_THROWS_AS(patch(e, 0), ShapeError);

    for (const std::size_t w : {1, 3, 7, 16, 33, 100, 511}) {
        const auto p = patch(e, w);
        const std::size_t used = p.patch_count * w;
        CHECK(p.patch_count == 512 / w);
        for (const auto m : kModalities) {
            const auto flat = p.modality(m);
            for (std::size_t i = 0; i < used; ++i) CHECK(flat[i] == e.channel(m)[i]);
        }
    }
}

TEST_CASE("synthetic generation is deterministic") {
    const auto a = synth_generate(2, 5, 42);
    const auto b = synth_generate(2, 5, 42);
    const auto c = synth_generate(2, 5, 43);
    REQUIRE(a.size() == 2);
    CHECK(a[0].subject_id == "subject_000");
    CHECK(a[0].eeg == b[0].eeg);
    CHECK(a[1].emg == b[1].emg);
    CHECK(a[1].labels == b[1].labels);
    CHECK(a[0].eeg != c[0].eeg);
    for (const auto& r : a) CHECK_NOTHROW(r.validate());

    TempDir dir;
    save_record(a[0], dir / "x");
    save_record(b[0], dir / "y");
    for (const char* f : {"meta", "eeg.f32le", "emg.f32le", "labels.txt"}) {
        std::ifstream fx(dir / "x" / f, std::ios::binary), fy(dir / "y" / f, std::ios::binary);
        const std::string sx((std::istreambuf_iterator<char>(fx)), {}), sy((std::istreambuf_iterator<char>(fy)), {});
        CHECK(sx == sy);
    }
}

TEST_CASE("identity transitions from Wake stay in Wake") {
    SynthConfig cfg;
    cfg.sample_rate_hz = 32;
    cfg.transition = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    cfg.initial_stage = Stage::Wake;
    const auto r = synth_generate(1, 200, 3, cfg)[0];
    for (const auto s : r.labels) CHECK(s == Stage::Wake);
}

TEST_CASE("invalid transition matrix names the row") {
    SynthConfig cfg;
    cfg.transition[1] = {0.5, 0.4, 0.2};
    try {
        cfg.validate();
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("row 1") != std::string::npos);
    }
    CHECK_THROWS_AS(synth_generate(1, 10, 0, cfg), ConfigError);
    CHECK_THROWS_AS(parse_transition_matrix({1, 0, 0}), ConfigError);
}

namespace {

// Left eigenvector of the transition matrix for eigenvalue 1, normalised to
// a probability vector.
std::array<double, 3> stationary(const TransitionMatrix& p) {
    Eigen::Matrix3d m;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = p[i][j];
    Eigen::EigenSolver<Eigen::Matrix3d> solver(m.transpose());
    int best = 0;
    for (int i = 1; i < 3; ++i) {
        if (std::abs(solver.eigenvalues()[i] - 1.0) < std::abs(solver.eigenvalues()[best] - 1.0)) best = i;
    }
    const Eigen::Vector3d v = solver.eigenvectors().col(best).real();
    const double s = v.sum();
    return {v[0] / s, v[1] / s, v[2] / s};
}

std::array<double, 3> frequencies(const std::vector<SignalRecord>& records) {
    std::array<double, 3> f{};
    double n = 0;
    for (const auto& r : records) {
        for (const auto s : r.labels) {
            f[class_index(s)] += 1;
            n += 1;
        }
    }
    for (auto& v : f) v /= n;
    return f;
}

}  // namespace

TEST_CASE("default chain: 1000 s label frequencies track the stationary distribution") {
    SynthConfig cfg;
    cfg.sample_rate_hz = 8;  // labels do not depend on the sample rate
    const auto pi = stationary(cfg.transition);
    CHECK(pi[0] + pi[1] + pi[2] == doctest::Approx(1.0));
    const auto f = frequencies(synth_generate(1, 1000, 42, cfg));
    for (int c = 0; c < 3; ++c) CHECK(std::abs(f[c] - pi[c]) <= 0.05);

    // Pooled over many subjects the empirical law converges tightly.
    const auto pooled = frequencies(synth_generate(20, 1000, 7, cfg));
    for (int c = 0; c < 3; ++c) CHECK(std::abs(pooled[c] - pi[c]) <= 0.02);
}

TEST_CASE("synthetic stages carry their signatures") {
    const auto r = normalize_subject(synth_generate(1, 300, 5)[0]).first;
    const auto epochs = slice_epochs(r);
    std::array<double, 3> emg_power{}, count{};
    for (const auto& e : epochs) {
        double p = 0.0;
        for (const double v : e.channel(Modality::Emg)) p += v * v;
        emg_power[class_index(e.label)] += p / static_cast<double>(e.samples);
        count[class_index(e.label)] += 1;
    }
    for (int c = 0; c < 3; ++c) emg_power[c] /= count[c];
    CHECK(emg_power[0] > 10 * emg_power[1]);
    CHECK(emg_power[0] > 10 * emg_power[2]);
}
