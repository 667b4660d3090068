#include "trm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

namespace trm {

namespace {

constexpr char kMagic[4] = {'E', 'T', 'S', 'R'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u16(std::ostream& out, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
    out.write(reinterpret_cast<const char*>(b), 2);
}

void write_f32(std::ostream& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(out, bits);
}

std::uint32_t read_u32(std::istream& in, const char* what) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw ValidationError(std::string("truncated segment file while reading ") + what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint16_t read_u16(std::istream& in, const char* what) {
    unsigned char b[2];
    if (!in.read(reinterpret_cast<char*>(b), 2))
        throw ValidationError(std::string("truncated segment file while reading ") + what);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

float read_f32(std::istream& in, const char* what) {
    const std::uint32_t bits = read_u32(in, what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

void EegSegmentSet::validate() const {
    if (channels < 1 || time_points < 1)
        throw ValidationError("segment set needs positive channel and time dims");
    if (n_classes < 1) throw ValidationError("segment set needs >= 1 class");
    if (static_cast<int>(channel_names.size()) != channels)
        throw ValidationError("channel name count does not match channel count");
    const std::size_t seg_len = static_cast<std::size_t>(channels) * time_points;
    for (const auto& seg : segments) {
        if (seg.label < 0 || seg.label >= n_classes)
            throw ValidationError("segment label " + std::to_string(seg.label) +
                                  " out of range [0," + std::to_string(n_classes) + ")");
        if (seg.data.size() != seg_len)
            throw ValidationError("segment payload size mismatch");
    }
}

void save_segments(const EegSegmentSet& set, const std::string& path) {
    set.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write segment file '" + path + "'");
    out.write(kMagic, 4);
    write_u32(out, kVersion);
    write_u32(out, static_cast<std::uint32_t>(set.segments.size()));
    write_u32(out, static_cast<std::uint32_t>(set.channels));
    write_u32(out, static_cast<std::uint32_t>(set.time_points));
    write_u32(out, static_cast<std::uint32_t>(set.n_classes));
    write_f32(out, set.sample_rate_hz);
    for (const auto& name : set.channel_names) {
        write_u16(out, static_cast<std::uint16_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
    }
    for (const auto& seg : set.segments) {
        write_u32(out, static_cast<std::uint32_t>(seg.label));
        for (float v : seg.data) write_f32(out, v);
    }
    if (!out) throw ValidationError("write failure on segment file '" + path + "'");
}

EegSegmentSet load_segments(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open segment file '" + path + "'");
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw ValidationError("bad magic in segment file '" + path + "'");
    const std::uint32_t version = read_u32(in, "version");
    if (version != kVersion)
        throw ValidationError("unsupported segment file version " + std::to_string(version));
    const std::uint32_t n_segments = read_u32(in, "segment count");
    EegSegmentSet set;
    set.channels = static_cast<int>(read_u32(in, "channel count"));
    set.time_points = static_cast<int>(read_u32(in, "time points"));
    set.n_classes = static_cast<int>(read_u32(in, "class count"));
    set.sample_rate_hz = read_f32(in, "sample rate");
    for (int c = 0; c < set.channels; ++c) {
        const std::uint16_t len = read_u16(in, "channel name length");
        std::string name(len, '\0');
        if (len && !in.read(name.data(), len))
            throw ValidationError("truncated segment file while reading channel name");
        set.channel_names.push_back(std::move(name));
    }
    const std::size_t seg_len = static_cast<std::size_t>(set.channels) * set.time_points;
    for (std::uint32_t s = 0; s < n_segments; ++s) {
        EegSegmentSet::Segment seg;
        seg.label = static_cast<int>(read_u32(in, "segment label"));
        seg.data.resize(seg_len);
        for (std::size_t i = 0; i < seg_len; ++i) seg.data[i] = read_f32(in, "segment payload");
        set.segments.push_back(std::move(seg));
    }
    set.validate();
    return set;
}

EegSegmentSet baseline_correct(const EegSegmentSet& set, double baseline_ms) {
    if (baseline_ms <= 0.0) throw ValidationError("baseline window must be positive");
    const int window =
        static_cast<int>(std::lround(baseline_ms * set.sample_rate_hz / 1000.0));
    if (window < 1)
        throw ValidationError("baseline window shorter than one sample at this rate");
    if (window > set.time_points)
        throw ValidationError("baseline window of " + std::to_string(window) +
                              " samples longer than segment (" +
                              std::to_string(set.time_points) + ")");
    EegSegmentSet out = set;
    for (auto& seg : out.segments) {
        for (int c = 0; c < out.channels; ++c) {
            float* row = seg.data.data() + static_cast<std::size_t>(c) * out.time_points;
            double sum = 0.0;
            for (int t = 0; t < window; ++t) sum += row[t];
            const float mean = static_cast<float>(sum / window);
            for (int t = 0; t < out.time_points; ++t) row[t] -= mean;
        }
    }
    return out;
}

void SynthSpec::validate() const {
    montage.validate();
    if (n_classes < 2) throw ValidationError("synthetic spec needs >= 2 classes");
    if (static_cast<int>(active_channels.size()) != n_classes)
        throw ValidationError("need one active channel set per class");
    for (const auto& cls : active_channels) {
        if (cls.empty()) throw ValidationError("active channel set must be nonempty");
        for (int ch : cls)
            if (ch < 0 || ch >= montage.channel_count())
                throw ValidationError("active channel index out of range");
    }
    if (amplitude <= 0.0 || noise_sigma < 0.0)
        throw ValidationError("amplitude must be positive, sigma nonnegative");
    if (freq_lo_hz <= 0.0 || freq_hi_hz < freq_lo_hz)
        throw ValidationError("bad oscillation band");
    if (time_points < 1 || segments_per_class < 1 || sample_rate_hz <= 0.0)
        throw ValidationError("bad synthetic dimensions");
}

EegSegmentSet generate_synthetic(const SynthSpec& spec) {
    spec.validate();
    EegSegmentSet set;
    set.channels = spec.montage.channel_count();
    set.time_points = spec.time_points;
    set.n_classes = spec.n_classes;
    set.sample_rate_hz = static_cast<float>(spec.sample_rate_hz);
    for (const auto& ch : spec.montage.channels) set.channel_names.push_back(ch.name);

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> freq(spec.freq_lo_hz, spec.freq_hi_hz);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * 3.14159265358979323846);

    const std::size_t seg_len = static_cast<std::size_t>(set.channels) * set.time_points;
    for (int cls = 0; cls < spec.n_classes; ++cls) {
        std::vector<bool> active(static_cast<std::size_t>(set.channels), false);
        for (int ch : spec.active_channels[static_cast<std::size_t>(cls)])
            active[static_cast<std::size_t>(ch)] = true;
        for (int s = 0; s < spec.segments_per_class; ++s) {
            EegSegmentSet::Segment seg;
            seg.label = cls;
            seg.data.resize(seg_len);
            const double f = freq(rng);
            const double ph = phase(rng);
            for (int c = 0; c < set.channels; ++c) {
                float* row = seg.data.data() + static_cast<std::size_t>(c) * set.time_points;
                for (int t = 0; t < set.time_points; ++t)
                    row[t] = static_cast<float>(spec.noise_sigma * noise(rng));
                if (active[static_cast<std::size_t>(c)]) {
                    for (int t = 0; t < set.time_points; ++t)
                        row[t] += static_cast<float>(
                            spec.amplitude *
                            std::sin(2.0 * 3.14159265358979323846 * f * t / spec.sample_rate_hz +
                                     ph));
                }
            }
            set.segments.push_back(std::move(seg));
        }
    }
    return set;
}

std::vector<std::vector<int>> corner_active_sets(const Montage& montage, int n_classes,
                                                 int per_class) {
    montage.validate();
    if (n_classes < 1 || n_classes > 4)
        throw ValidationError("corner heuristic supports 1..4 classes");
    if (per_class < 1 || per_class * n_classes > montage.channel_count())
        throw ValidationError("not enough channels for " + std::to_string(n_classes) + " x " +
                              std::to_string(per_class) + " active sets");
    const double h = montage.grid_height - 1, w = montage.grid_width - 1;
    const double corners[4][2] = {{0.0, 0.0}, {h, w}, {0.0, w}, {h, 0.0}};

    std::vector<std::vector<int>> sets;
    std::set<int> taken;
    for (int cls = 0; cls < n_classes; ++cls) {
        std::vector<int> order(static_cast<std::size_t>(montage.channel_count()));
        std::iota(order.begin(), order.end(), 0);
        auto dist = [&](int idx) {
            const auto& ch = montage.channels[static_cast<std::size_t>(idx)];
            const double dr = ch.row - corners[cls][0], dc = ch.col - corners[cls][1];
            return dr * dr + dc * dc;
        };
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return dist(a) < dist(b); });
        std::vector<int> chosen;
        for (int idx : order) {
            if (taken.count(idx)) continue;
            chosen.push_back(idx);
            taken.insert(idx);
            if (static_cast<int>(chosen.size()) == per_class) break;
        }
        sets.push_back(std::move(chosen));
    }
    return sets;
}

}  // namespace trm
