#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trm/errors.hpp"
#include "trm/montage.hpp"
#include "trm/tensor.hpp"

namespace trm {

/// Labeled collection of [C x TP] float32 EEG segments sharing channel names
/// and dimensions. Matches the on-disk "ETSR" format.
struct EegSegmentSet {
    struct Segment {
        int label = 0;
        std::vector<float> data;  // channel-major, C * TP values
    };

    std::vector<std::string> channel_names;
    float sample_rate_hz = 0.0f;
    int n_classes = 0;
    int channels = 0;
    int time_points = 0;
    std::vector<Segment> segments;

    int segment_count() const { return static_cast<int>(segments.size()); }

    void validate() const;

    /// One segment as a [C x TP] tensor in the requested precision.
    template <class S>
    Tensor<S> segment_tensor(int index) const {
        if (index < 0 || index >= segment_count())
            throw ValidationError("segment index " + std::to_string(index) + " out of range");
        const auto& seg = segments[static_cast<std::size_t>(index)];
        Tensor<S> t({channels, time_points});
        for (std::int64_t i = 0; i < t.numel(); ++i)
            t[i] = static_cast<S>(seg.data[static_cast<std::size_t>(i)]);
        return t;
    }

    /// Batch of segments as a [B x C x TP] tensor plus their labels.
    template <class S>
    Tensor<S> batch_tensor(const std::vector<int>& indices, std::vector<int>* labels) const {
        const int b = static_cast<int>(indices.size());
        Tensor<S> t({b, channels, time_points});
        if (labels) labels->resize(static_cast<std::size_t>(b));
        const std::int64_t seg_len = static_cast<std::int64_t>(channels) * time_points;
        for (int i = 0; i < b; ++i) {
            const int idx = indices[static_cast<std::size_t>(i)];
            if (idx < 0 || idx >= segment_count())
                throw ValidationError("segment index " + std::to_string(idx) + " out of range");
            const auto& seg = segments[static_cast<std::size_t>(idx)];
            S* dst = t.data() + static_cast<std::int64_t>(i) * seg_len;
            for (std::int64_t j = 0; j < seg_len; ++j)
                dst[j] = static_cast<S>(seg.data[static_cast<std::size_t>(j)]);
            if (labels) (*labels)[static_cast<std::size_t>(i)] = seg.label;
        }
        return t;
    }
};

EegSegmentSet load_segments(const std::string& path);
void save_segments(const EegSegmentSet& set, const std::string& path);

/// Subtracts, per segment and channel, the mean of the first baseline_ms
/// milliseconds from the whole channel.
EegSegmentSet baseline_correct(const EegSegmentSet& set, double baseline_ms);

/// Seeded synthetic EEG: Gaussian noise on every channel plus a band-limited
/// sinusoid (random frequency and phase per segment) added on the channels
/// active for the segment's class. Stands in for real recordings at desk
/// scale with a spatially localized class signal.
struct SynthSpec {
    Montage montage;
    int n_classes = 2;
    std::vector<std::vector<int>> active_channels;  // per class, montage channel indices
    double freq_lo_hz = 8.0;
    double freq_hi_hz = 12.0;
    double amplitude = 1.0;
    double noise_sigma = 0.25;
    int time_points = 128;
    int segments_per_class = 100;
    double sample_rate_hz = 128.0;
    std::uint64_t seed = 0;

    void validate() const;
};

EegSegmentSet generate_synthetic(const SynthSpec& spec);

/// Picks `per_class` channels nearest to a distinct grid corner for each
/// class: disjoint, spatially clustered active sets.
std::vector<std::vector<int>> corner_active_sets(const Montage& montage, int n_classes,
                                                 int per_class);

}  // namespace trm
