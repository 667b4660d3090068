#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "trm/layers.hpp"
#include "trm/montage.hpp"
#include "trm/trm_module.hpp"

namespace trm {

struct HostNetConfig {
    int n_temporal_filters = 40;
    int temporal_kernel_len = 25;
    int pool_len = 75;
    int pool_stride = 15;
    double dropout_p = 0.5;
    int n_classes = 2;
};

/// Shallow EEG classifier: temporal convolution, spatial convolution
/// collapsing the channel axis, squaring, mean pooling over time, safe log,
/// dropout and a dense softmax head.
template <class S>
class HostNet {
public:
    HostNet() = default;

    HostNet(const HostNetConfig& cfg, int channels, int time_points)
        : cfg_(cfg), channels_(channels), time_points_(time_points) {
        if (cfg.n_classes < 2) throw ValidationError("need at least 2 classes");
        if (time_points < cfg.temporal_kernel_len + cfg.pool_len - 1)
            throw ValidationError(
                "input too short: " + std::to_string(time_points) + " time points, need >= " +
                std::to_string(cfg.temporal_kernel_len + cfg.pool_len - 1) +
                " for temporal kernel plus pooling");
        const int t1 = time_points - cfg.temporal_kernel_len + 1;
        pooled_len_ = (t1 - cfg.pool_len) / cfg.pool_stride + 1;
        conv_time_ = Conv2d<S>(1, cfg.n_temporal_filters, 1, cfg.temporal_kernel_len, true);
        conv_spat_ =
            Conv2d<S>(cfg.n_temporal_filters, cfg.n_temporal_filters, channels, 1, true);
        pool_ = MeanPool<S>(cfg.pool_len, cfg.pool_stride);
        log_ = SafeLog<S>(1e-6);
        dropout_ = Dropout<S>(cfg.dropout_p);
        dense_ = Dense<S>(cfg.n_temporal_filters * pooled_len_, cfg.n_classes);
    }

    void init_params(std::mt19937_64& rng) {
        conv_time_.init_params(rng);
        conv_spat_.init_params(rng);
        dense_.init_params(rng);
    }

    Tensor<S> forward(const Tensor<S>& x, Mode mode, std::mt19937_64& dropout_rng) {
        if (x.rank() != 3 || x.dim(1) != channels_ || x.dim(2) != time_points_)
            throw ValidationError("classifier input shape mismatch: got " + x.shape_str() +
                                  ", expected [B x " + std::to_string(channels_) + " x " +
                                  std::to_string(time_points_) + "]");
        const int b = x.dim(0);
        Tensor<S> t = x;
        t.reshape({b, 1, channels_, time_points_});
        t = conv_time_.forward(t);
        t = conv_spat_.forward(t);
        t = square_.forward(t);
        t = pool_.forward(t);
        t = log_.forward(t);
        t = dropout_.forward(t, mode, dropout_rng);
        t.reshape({b, cfg_.n_temporal_filters * pooled_len_});
        return dense_.forward(t);
    }

    Tensor<S> backward(const Tensor<S>& grad_logits) {
        Tensor<S> g = dense_.backward(grad_logits);
        const int b = g.dim(0);
        g.reshape({b, cfg_.n_temporal_filters, 1, pooled_len_});
        g = dropout_.backward(g);
        g = log_.backward(g);
        g = pool_.backward(g);
        g = square_.backward(g);
        g = conv_spat_.backward(g);
        g = conv_time_.backward(g);
        g.reshape({b, channels_, time_points_});
        return g;
    }

    void zero_grad() {
        conv_time_.zero_grad();
        conv_spat_.zero_grad();
        dense_.zero_grad();
    }

    void collect_params(const std::string& prefix, std::vector<ParamRef<S>>& out) {
        conv_time_.collect_params(prefix + ".conv_time", out);
        conv_spat_.collect_params(prefix + ".conv_spat", out);
        dense_.collect_params(prefix + ".dense", out);
    }

    std::int64_t param_count() const {
        return conv_time_.param_count() + conv_spat_.param_count() + dense_.param_count();
    }

    const HostNetConfig& config() const { return cfg_; }
    int channels() const { return channels_; }
    int time_points() const { return time_points_; }
    int pooled_len() const { return pooled_len_; }

private:
    HostNetConfig cfg_;
    int channels_ = 0;
    int time_points_ = 0;
    int pooled_len_ = 0;

    Conv2d<S> conv_time_, conv_spat_;
    Square<S> square_;
    MeanPool<S> pool_;
    SafeLog<S> log_{1e-6};
    Dropout<S> dropout_;
    Dense<S> dense_;
};

/// Host classifier with an optional topographic front end. The front end
/// emits a tensor of exactly the raw input's shape, so the host layers are
/// identical with and without it.
template <class S>
class ClassifierModel {
public:
    ClassifierModel() = default;

    Tensor<S> forward(const Tensor<S>& x, Mode mode, bool update_running = true) {
        if (trm_front) {
            Tensor<S> t = trm_front->forward(x, mode, update_running);
            return host.forward(t, mode, dropout_rng);
        }
        return host.forward(x, mode, dropout_rng);
    }

    /// Cross-entropy loss with a full backward pass; parameter gradients are
    /// accumulated in the layers. Optionally reports the input gradient.
    double loss_and_grad(const Tensor<S>& x, const std::vector<int>& labels, Mode mode,
                         bool update_running = true, Tensor<S>* grad_input = nullptr) {
        Tensor<S> logits = forward(x, mode, update_running);
        auto ce = softmax_cross_entropy(logits, labels);
        Tensor<S> g = host.backward(ce.grad_logits);
        if (trm_front) g = trm_front->backward(g);
        if (grad_input) *grad_input = std::move(g);
        return ce.loss;
    }

    std::vector<int> predict(const Tensor<S>& x) {
        Tensor<S> logits = forward(x, Mode::kInference);
        const int n = logits.dim(0), k = logits.dim(1);
        std::vector<int> labels(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            int best = 0;
            for (int j = 1; j < k; ++j)
                if (logits.at(i, j) > logits.at(i, best)) best = j;
            labels[static_cast<std::size_t>(i)] = best;
        }
        return labels;
    }

    void zero_grad() {
        if (trm_front) trm_front->zero_grad();
        host.zero_grad();
    }

    std::vector<ParamRef<S>> params() {
        std::vector<ParamRef<S>> out;
        if (trm_front) trm_front->collect_params("trm", out);
        host.collect_params("host", out);
        return out;
    }

    std::vector<StatRef<S>> stats() {
        std::vector<StatRef<S>> out;
        if (trm_front) trm_front->collect_stats("trm", out);
        return out;
    }

    std::int64_t param_count() const {
        return (trm_front ? trm_front->param_count() : 0) + host.param_count();
    }

    std::optional<TrmModule<S>> trm_front;
    HostNet<S> host;
    std::mt19937_64 dropout_rng{0x9e3779b97f4a7c15ull};
};

/// Builds a classifier for [B x C x TP] input. `trm_k` of 0 means no
/// topographic front end; otherwise the montage is required and must cover
/// exactly the input channels.
template <class S>
ClassifierModel<S> build_model(const HostNetConfig& config, const Montage* montage, int trm_k,
                               int channels, int time_points, std::uint64_t seed) {
    ClassifierModel<S> model;
    if (trm_k != 0) {
        if (trm_k < 2) throw ValidationError("base kernel must be 0 (off) or >= 2");
        if (!montage) throw ValidationError("topographic front end requires a montage");
        if (montage->channel_count() != channels)
            throw ValidationError("montage has " + std::to_string(montage->channel_count()) +
                                  " channels, input has " + std::to_string(channels));
        model.trm_front.emplace(*montage, trm_k);
    }
    model.host = HostNet<S>(config, channels, time_points);
    std::mt19937_64 rng(seed);
    if (model.trm_front) model.trm_front->init_params(rng);
    model.host.init_params(rng);
    model.dropout_rng.seed(seed ^ 0xd1b54a32d192ed03ull);
    return model;
}

}  // namespace trm
