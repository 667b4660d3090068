#pragma once

#include <string>
#include <vector>

#include "trm/errors.hpp"
#include "trm/tensor.hpp"

namespace trm {

/// Electrode-to-grid assignment. Channels are kept in signal order; each one
/// owns a distinct (row, col) cell of the grid.
struct Montage {
    struct Channel {
        std::string name;
        int row = 0;
        int col = 0;
    };

    std::string name;
    int grid_height = 0;
    int grid_width = 0;
    std::vector<Channel> channels;

    int channel_count() const { return static_cast<int>(channels.size()); }

    /// Throws ValidationError unless all invariants hold: names unique,
    /// cells unique, coordinates in range, C <= H*W.
    void validate() const;
};

Montage load_montage(const std::string& path);
void save_montage(const Montage& montage, const std::string& path);
Montage parse_montage(const std::string& text);

/// Reorders the montage channels to match the given signal channel order.
/// Binding is by name when both sides carry names (any mismatch is a hard
/// error); positional when the signal has no names (counts must agree).
Montage bind_channels(const Montage& montage, const std::vector<std::string>& signal_names);

/// Mapping block: scatter a [C x TP] signal onto the montage grid, producing
/// a [H x W x TP] topographic tensor. Cells with no electrode stay exactly 0.
/// When `signal_names` is given it must match the montage channel order.
template <class S>
Tensor<S> map_to_topographic(const Tensor<S>& signal, const Montage& montage,
                             const std::vector<std::string>* signal_names = nullptr) {
    if (signal.rank() != 2) throw ValidationError("signal must be a [C x TP] matrix");
    const int c = signal.dim(0);
    const int tp = signal.dim(1);
    if (c != montage.channel_count())
        throw ValidationError("channel count mismatch: signal has " + std::to_string(c) +
                              ", montage has " + std::to_string(montage.channel_count()));
    if (signal_names) {
        if (static_cast<int>(signal_names->size()) != c)
            throw ValidationError("channel name list length mismatch");
        for (int i = 0; i < c; ++i)
            if ((*signal_names)[static_cast<std::size_t>(i)] !=
                montage.channels[static_cast<std::size_t>(i)].name)
                throw ValidationError("channel name mismatch at index " + std::to_string(i) +
                                      ": signal '" + (*signal_names)[static_cast<std::size_t>(i)] +
                                      "' vs montage '" +
                                      montage.channels[static_cast<std::size_t>(i)].name + "'");
    }
    Tensor<S> out({montage.grid_height, montage.grid_width, tp});
    for (int i = 0; i < c; ++i) {
        const auto& ch = montage.channels[static_cast<std::size_t>(i)];
        const S* src = signal.data() + static_cast<std::int64_t>(i) * tp;
        S* dst = out.data() +
                 (static_cast<std::int64_t>(ch.row) * montage.grid_width + ch.col) * tp;
        for (int t = 0; t < tp; ++t) dst[t] = src[t];
    }
    return out;
}

/// Inverse of the mapping block: read assigned cells back into channel order.
template <class S>
Tensor<S> gather_from_topographic(const Tensor<S>& topo, const Montage& montage) {
    if (topo.rank() != 3) throw ValidationError("topographic tensor must be [H x W x TP]");
    if (topo.dim(0) != montage.grid_height || topo.dim(1) != montage.grid_width)
        throw ValidationError("topographic tensor dims " + topo.shape_str() +
                              " do not match montage grid");
    const int tp = topo.dim(2);
    Tensor<S> out({montage.channel_count(), tp});
    for (int i = 0; i < montage.channel_count(); ++i) {
        const auto& ch = montage.channels[static_cast<std::size_t>(i)];
        const S* src = topo.data() +
                       (static_cast<std::int64_t>(ch.row) * montage.grid_width + ch.col) * tp;
        S* dst = out.data() + static_cast<std::int64_t>(i) * tp;
        for (int t = 0; t < tp; ++t) dst[t] = src[t];
    }
    return out;
}

}  // namespace trm
