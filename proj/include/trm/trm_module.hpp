#pragma once

#include <random>
#include <string>
#include <vector>

#include "trm/layers.hpp"
#include "trm/montage.hpp"
#include "trm/schedule.hpp"
#include "trm/tensor.hpp"

namespace trm {

/// Topographic representation module: scatters each time slice of a
/// [B x C x TP] signal onto the montage grid, runs the kernel-shrinking
/// convolution stack (batch norm after every convolution) per slice with
/// weights shared across time, and reassembles a [B x C x TP] output.
///
/// Batch and time are folded into one effective convolution batch of B*TP
/// single-channel [H x W] maps; batch norm statistics therefore pool over
/// batch, time and the spatial extent of each feature map.
template <class S>
class TrmModule {
public:
    TrmModule() = default;

    TrmModule(const Montage& montage, int base_k) : montage_(montage) {
        montage_.validate();
        channels_ = montage_.channel_count();
        schedule_ = derive_schedule(montage_.grid_height, montage_.grid_width, base_k);
        for (std::size_t i = 0; i < schedule_.steps.size(); ++i) {
            const auto& step = schedule_.steps[i];
            const int cin = (i == 0) ? 1 : channels_;
            convs_.emplace_back(cin, channels_, step.kernel_h, step.kernel_w, step.has_bias);
            bns_.emplace_back(channels_);
        }
    }

    void init_params(std::mt19937_64& rng) {
        for (auto& conv : convs_) conv.init_params(rng);
    }

    Tensor<S> forward(const Tensor<S>& x, Mode mode, bool update_running = true) {
        if (x.rank() != 3) throw ValidationError("module input must be [B x C x TP]");
        if (x.dim(1) != channels_)
            throw ValidationError("module channel mismatch: input has " +
                                  std::to_string(x.dim(1)) + ", montage has " +
                                  std::to_string(channels_));
        batch_ = x.dim(0);
        tp_ = x.dim(2);

        Tensor<S> slices = scatter(x);
        for (std::size_t i = 0; i < convs_.size(); ++i) {
            Tensor<S> z = convs_[i].forward(slices);
            slices = bns_[i].forward(z, mode, update_running);
        }
        // slices is now [B*TP x C x 1 x 1]
        Tensor<S> out({batch_, channels_, tp_});
        for (int b = 0; b < batch_; ++b)
            for (int t = 0; t < tp_; ++t) {
                const S* src =
                    slices.data() + (static_cast<std::int64_t>(b) * tp_ + t) * channels_;
                for (int c = 0; c < channels_; ++c)
                    out[(static_cast<std::int64_t>(b) * channels_ + c) * tp_ + t] = src[c];
            }
        return out;
    }

    Tensor<S> backward(const Tensor<S>& grad_out) {
        if (grad_out.rank() != 3 || grad_out.dim(0) != batch_ ||
            grad_out.dim(1) != channels_ || grad_out.dim(2) != tp_)
            throw ValidationError("module backward shape mismatch: " + grad_out.shape_str());

        Tensor<S> g({batch_ * tp_, channels_, 1, 1});
        for (int b = 0; b < batch_; ++b)
            for (int t = 0; t < tp_; ++t) {
                S* dst = g.data() + (static_cast<std::int64_t>(b) * tp_ + t) * channels_;
                for (int c = 0; c < channels_; ++c)
                    dst[c] = grad_out[(static_cast<std::int64_t>(b) * channels_ + c) * tp_ + t];
            }
        for (std::size_t i = convs_.size(); i-- > 0;) {
            Tensor<S> gz = bns_[i].backward(g);
            g = convs_[i].backward(gz);
        }
        // g is [B*TP x 1 x H x W]; only electrode cells feed back into the input
        Tensor<S> grad_in({batch_, channels_, tp_});
        const int w = montage_.grid_width;
        const std::int64_t cell_count =
            static_cast<std::int64_t>(montage_.grid_height) * w;
        for (int b = 0; b < batch_; ++b)
            for (int t = 0; t < tp_; ++t) {
                const S* src =
                    g.data() + (static_cast<std::int64_t>(b) * tp_ + t) * cell_count;
                for (int c = 0; c < channels_; ++c) {
                    const auto& ch = montage_.channels[static_cast<std::size_t>(c)];
                    grad_in[(static_cast<std::int64_t>(b) * channels_ + c) * tp_ + t] =
                        src[static_cast<std::int64_t>(ch.row) * w + ch.col];
                }
            }
        return grad_in;
    }

    void zero_grad() {
        for (auto& conv : convs_) conv.zero_grad();
    }

    void collect_params(const std::string& prefix, std::vector<ParamRef<S>>& out) {
        for (std::size_t i = 0; i < convs_.size(); ++i)
            convs_[i].collect_params(prefix + ".conv" + std::to_string(i), out);
    }

    void collect_stats(const std::string& prefix, std::vector<StatRef<S>>& out) {
        for (std::size_t i = 0; i < bns_.size(); ++i)
            bns_[i].collect_stats(prefix + ".bn" + std::to_string(i), out);
    }

    std::int64_t param_count() const {
        std::int64_t total = 0;
        for (const auto& conv : convs_) total += conv.param_count();
        return total;
    }

    const Montage& montage() const { return montage_; }
    const KernelSchedule& schedule() const { return schedule_; }
    int channels() const { return channels_; }

private:
    Tensor<S> scatter(const Tensor<S>& x) const {
        const int h = montage_.grid_height, w = montage_.grid_width;
        Tensor<S> slices({batch_ * tp_, 1, h, w});
        for (int b = 0; b < batch_; ++b)
            for (int c = 0; c < channels_; ++c) {
                const auto& ch = montage_.channels[static_cast<std::size_t>(c)];
                const S* src = x.data() + (static_cast<std::int64_t>(b) * channels_ + c) * tp_;
                S* base = slices.data() + static_cast<std::int64_t>(b) * tp_ * h * w +
                          static_cast<std::int64_t>(ch.row) * w + ch.col;
                for (int t = 0; t < tp_; ++t)
                    base[static_cast<std::int64_t>(t) * h * w] = src[t];
            }
        return slices;
    }

    Montage montage_;
    int channels_ = 0;
    KernelSchedule schedule_;
    std::vector<Conv2d<S>> convs_;
    std::vector<BatchNorm<S>> bns_;

    int batch_ = 0;
    int tp_ = 0;
};

}  // namespace trm
