#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "trm/errors.hpp"
#include "trm/tensor.hpp"

namespace trm {

enum class Mode { kTraining, kInference };

/// Named view of one trainable tensor and its gradient buffer.
template <class S>
struct ParamRef {
    std::string name;
    Tensor<S>* value = nullptr;
    Tensor<S>* grad = nullptr;
};

/// Named view of a non-trainable state tensor (batch norm running stats).
template <class S>
struct StatRef {
    std::string name;
    Tensor<S>* value = nullptr;
};

template <class S>
inline void init_uniform_fan_in(Tensor<S>& w, int fan_in, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::int64_t i = 0; i < w.numel(); ++i) w[i] = static_cast<S>(dist(rng));
}

// ---------------------------------------------------------------------------
// 2-D valid convolution (cross-correlation, stride 1, no padding)
// ---------------------------------------------------------------------------

template <class S>
class Conv2d {
public:
    Conv2d() = default;

    Conv2d(int in_channels, int out_channels, int kernel_h, int kernel_w, bool has_bias)
        : in_channels_(in_channels),
          out_channels_(out_channels),
          kernel_h_(kernel_h),
          kernel_w_(kernel_w),
          has_bias_(has_bias),
          weights_({out_channels, in_channels, kernel_h, kernel_w}),
          grad_weights_({out_channels, in_channels, kernel_h, kernel_w}) {
        if (in_channels < 1 || out_channels < 1 || kernel_h < 1 || kernel_w < 1)
            throw ValidationError("conv dims must be positive");
        if (has_bias_) {
            bias_ = Tensor<S>({out_channels});
            grad_bias_ = Tensor<S>({out_channels});
        }
    }

    void init_params(std::mt19937_64& rng) {
        init_uniform_fan_in(weights_, in_channels_ * kernel_h_ * kernel_w_, rng);
        if (has_bias_) bias_.fill(S(0));
    }

    Tensor<S> forward(const Tensor<S>& x) {
        check_input(x);
        input_ = x;
        const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
        const int oh = h - kernel_h_ + 1, ow = w - kernel_w_ + 1;
        Tensor<S> y({n, out_channels_, oh, ow});

        const S* xd = x.data();
        S* yd = y.data();
        const S* wd = weights_.data();
        const std::int64_t x_chan = static_cast<std::int64_t>(h) * w;
        const std::int64_t y_chan = static_cast<std::int64_t>(oh) * ow;
        for (int in = 0; in < n; ++in) {
            for (int oc = 0; oc < out_channels_; ++oc) {
                S* ybase = yd + (static_cast<std::int64_t>(in) * out_channels_ + oc) * y_chan;
                const S b = has_bias_ ? bias_[oc] : S(0);
                for (std::int64_t i = 0; i < y_chan; ++i) ybase[i] = b;
                for (int ic = 0; ic < in_channels_; ++ic) {
                    const S* xchan =
                        xd + (static_cast<std::int64_t>(in) * in_channels_ + ic) * x_chan;
                    const S* wk =
                        wd + ((static_cast<std::int64_t>(oc) * in_channels_ + ic) * kernel_h_) *
                                 kernel_w_;
                    for (int kh = 0; kh < kernel_h_; ++kh) {
                        for (int kw = 0; kw < kernel_w_; ++kw) {
                            const S wv = wk[kh * kernel_w_ + kw];
                            const S* xoff = xchan + static_cast<std::int64_t>(kh) * w + kw;
                            for (int r = 0; r < oh; ++r) {
                                const S* xr = xoff + static_cast<std::int64_t>(r) * w;
                                S* yr = ybase + static_cast<std::int64_t>(r) * ow;
                                for (int c = 0; c < ow; ++c) yr[c] += wv * xr[c];
                            }
                        }
                    }
                }
            }
        }
        return y;
    }

    /// Gradients w.r.t. input, weights and bias of the cached forward pass.
    /// Weight/bias gradients accumulate into the layer's grad buffers.
    Tensor<S> backward(const Tensor<S>& grad_out) {
        const int n = input_.dim(0), h = input_.dim(2), w = input_.dim(3);
        const int oh = h - kernel_h_ + 1, ow = w - kernel_w_ + 1;
        if (grad_out.rank() != 4 || grad_out.dim(0) != n || grad_out.dim(1) != out_channels_ ||
            grad_out.dim(2) != oh || grad_out.dim(3) != ow)
            throw ValidationError("conv backward: grad shape " + grad_out.shape_str() +
                                  " inconsistent with forward pass");

        Tensor<S> grad_in(input_.shape());
        const S* xd = input_.data();
        const S* gyd = grad_out.data();
        S* gxd = grad_in.data();
        const S* wd = weights_.data();
        S* gwd = grad_weights_.data();
        const std::int64_t x_chan = static_cast<std::int64_t>(h) * w;
        const std::int64_t y_chan = static_cast<std::int64_t>(oh) * ow;

        for (int in = 0; in < n; ++in) {
            for (int oc = 0; oc < out_channels_; ++oc) {
                const S* gybase =
                    gyd + (static_cast<std::int64_t>(in) * out_channels_ + oc) * y_chan;
                if (has_bias_) {
                    S acc = S(0);
                    for (std::int64_t i = 0; i < y_chan; ++i) acc += gybase[i];
                    grad_bias_[oc] += acc;
                }
                for (int ic = 0; ic < in_channels_; ++ic) {
                    const S* xchan =
                        xd + (static_cast<std::int64_t>(in) * in_channels_ + ic) * x_chan;
                    S* gxchan =
                        gxd + (static_cast<std::int64_t>(in) * in_channels_ + ic) * x_chan;
                    const std::int64_t wbase =
                        ((static_cast<std::int64_t>(oc) * in_channels_ + ic) * kernel_h_) *
                        kernel_w_;
                    for (int kh = 0; kh < kernel_h_; ++kh) {
                        for (int kw = 0; kw < kernel_w_; ++kw) {
                            const S wv = wd[wbase + kh * kernel_w_ + kw];
                            const S* xoff = xchan + static_cast<std::int64_t>(kh) * w + kw;
                            S* gxoff = gxchan + static_cast<std::int64_t>(kh) * w + kw;
                            S acc0 = S(0), acc1 = S(0), acc2 = S(0), acc3 = S(0);
                            for (int r = 0; r < oh; ++r) {
                                const S* gyr = gybase + static_cast<std::int64_t>(r) * ow;
                                const S* xr = xoff + static_cast<std::int64_t>(r) * w;
                                S* gxr = gxoff + static_cast<std::int64_t>(r) * w;
                                int c = 0;
                                for (; c + 4 <= ow; c += 4) {
                                    gxr[c] += wv * gyr[c];
                                    gxr[c + 1] += wv * gyr[c + 1];
                                    gxr[c + 2] += wv * gyr[c + 2];
                                    gxr[c + 3] += wv * gyr[c + 3];
                                    acc0 += gyr[c] * xr[c];
                                    acc1 += gyr[c + 1] * xr[c + 1];
                                    acc2 += gyr[c + 2] * xr[c + 2];
                                    acc3 += gyr[c + 3] * xr[c + 3];
                                }
                                for (; c < ow; ++c) {
                                    gxr[c] += wv * gyr[c];
                                    acc0 += gyr[c] * xr[c];
                                }
                            }
                            gwd[wbase + kh * kernel_w_ + kw] += ((acc0 + acc1) + (acc2 + acc3));
                        }
                    }
                }
            }
        }
        return grad_in;
    }

    void zero_grad() {
        grad_weights_.fill(S(0));
        if (has_bias_) grad_bias_.fill(S(0));
    }

    void collect_params(const std::string& prefix, std::vector<ParamRef<S>>& out) {
        out.push_back({prefix + ".weight", &weights_, &grad_weights_});
        if (has_bias_) out.push_back({prefix + ".bias", &bias_, &grad_bias_});
    }

    std::int64_t param_count() const {
        return weights_.numel() + (has_bias_ ? bias_.numel() : 0);
    }

    int in_channels() const { return in_channels_; }
    int out_channels() const { return out_channels_; }
    int kernel_h() const { return kernel_h_; }
    int kernel_w() const { return kernel_w_; }
    bool has_bias() const { return has_bias_; }
    Tensor<S>& weights() { return weights_; }
    Tensor<S>& bias() { return bias_; }

private:
    void check_input(const Tensor<S>& x) const {
        if (x.rank() != 4) throw ValidationError("conv input must be [N x C x H x W]");
        if (x.dim(1) != in_channels_)
            throw ValidationError("conv channel mismatch: input has " + std::to_string(x.dim(1)) +
                                  ", layer expects " + std::to_string(in_channels_));
        if (x.dim(2) < kernel_h_ || x.dim(3) < kernel_w_)
            throw ValidationError("conv kernel " + std::to_string(kernel_h_) + "x" +
                                  std::to_string(kernel_w_) + " larger than input " +
                                  x.shape_str());
    }

    int in_channels_ = 0, out_channels_ = 0, kernel_h_ = 0, kernel_w_ = 0;
    bool has_bias_ = false;
    Tensor<S> weights_, bias_;
    Tensor<S> grad_weights_, grad_bias_;
    Tensor<S> input_;
};

// ---------------------------------------------------------------------------
// Batch normalization without affine parameters
// ---------------------------------------------------------------------------

/// Normalizes per feature channel (dim 1) over all other axes. Training mode
/// uses batch statistics and updates running stats with the given momentum;
/// inference mode uses the running stats. No trainable parameters.
template <class S>
class BatchNorm {
public:
    BatchNorm() = default;

    explicit BatchNorm(int num_features, double epsilon = 1e-5, double momentum = 0.1)
        : num_features_(num_features),
          epsilon_(epsilon),
          momentum_(momentum),
          running_mean_({num_features}),
          running_var_({num_features}) {
        if (num_features < 1) throw ValidationError("batch norm needs >= 1 feature");
        running_mean_.fill(S(0));
        running_var_.fill(S(1));
    }

    Tensor<S> forward(const Tensor<S>& x, Mode mode, bool update_running = true) {
        if (x.rank() < 2 || x.dim(1) != num_features_)
            throw ValidationError("batch norm feature mismatch for input " + x.shape_str());
        const int n = x.dim(0);
        std::int64_t spatial = 1;
        for (int d = 2; d < x.rank(); ++d) spatial *= x.dim(d);
        const std::int64_t m = static_cast<std::int64_t>(n) * spatial;
        mode_ = mode;
        count_ = m;

        Tensor<S> y(x.shape());
        if (mode == Mode::kTraining) {
            if (m < 2)
                throw ValidationError("batch norm training mode needs >= 2 values per feature");
            mean_.assign(static_cast<std::size_t>(num_features_), 0.0);
            inv_std_.assign(static_cast<std::size_t>(num_features_), 0.0);
            for (int f = 0; f < num_features_; ++f) {
                double sum = 0.0, sumsq = 0.0;
                for (int in = 0; in < n; ++in) {
                    const S* row =
                        x.data() + (static_cast<std::int64_t>(in) * num_features_ + f) * spatial;
                    for (std::int64_t i = 0; i < spatial; ++i) {
                        const double v = static_cast<double>(row[i]);
                        sum += v;
                        sumsq += v * v;
                    }
                }
                const double mean = sum / static_cast<double>(m);
                double var = sumsq / static_cast<double>(m) - mean * mean;
                if (var < 0.0) var = 0.0;  // guard against cancellation on constant input
                mean_[static_cast<std::size_t>(f)] = mean;
                inv_std_[static_cast<std::size_t>(f)] = 1.0 / std::sqrt(var + epsilon_);
                if (update_running) {
                    const double unbiased =
                        (m > 1) ? var * static_cast<double>(m) / static_cast<double>(m - 1) : var;
                    running_mean_[f] = static_cast<S>((1.0 - momentum_) *
                                                          static_cast<double>(running_mean_[f]) +
                                                      momentum_ * mean);
                    running_var_[f] = static_cast<S>(
                        (1.0 - momentum_) * static_cast<double>(running_var_[f]) +
                        momentum_ * unbiased);
                }
                fill_normalized(x, y, f, n, spatial, mean,
                                inv_std_[static_cast<std::size_t>(f)]);
            }
            xhat_ = y;  // normalized output doubles as the backward cache
        } else {
            for (int f = 0; f < num_features_; ++f) {
                const double mean = static_cast<double>(running_mean_[f]);
                const double inv =
                    1.0 / std::sqrt(static_cast<double>(running_var_[f]) + epsilon_);
                fill_normalized(x, y, f, n, spatial, mean, inv);
            }
            inference_inv_std_.assign(static_cast<std::size_t>(num_features_), 0.0);
            for (int f = 0; f < num_features_; ++f)
                inference_inv_std_[static_cast<std::size_t>(f)] =
                    1.0 / std::sqrt(static_cast<double>(running_var_[f]) + epsilon_);
        }
        return y;
    }

    Tensor<S> backward(const Tensor<S>& grad_out) {
        if (grad_out.rank() < 2 || grad_out.dim(1) != num_features_)
            throw ValidationError("batch norm backward shape mismatch");
        const int n = grad_out.dim(0);
        std::int64_t spatial = 1;
        for (int d = 2; d < grad_out.rank(); ++d) spatial *= grad_out.dim(d);

        Tensor<S> grad_in(grad_out.shape());
        if (mode_ == Mode::kInference) {
            for (int f = 0; f < num_features_; ++f) {
                const S inv = static_cast<S>(inference_inv_std_[static_cast<std::size_t>(f)]);
                for (int in = 0; in < n; ++in) {
                    const std::int64_t off =
                        (static_cast<std::int64_t>(in) * num_features_ + f) * spatial;
                    const S* g = grad_out.data() + off;
                    S* gi = grad_in.data() + off;
                    for (std::int64_t i = 0; i < spatial; ++i) gi[i] = g[i] * inv;
                }
            }
            return grad_in;
        }

        const double m = static_cast<double>(count_);
        for (int f = 0; f < num_features_; ++f) {
            double sum_g = 0.0, sum_gx = 0.0;
            for (int in = 0; in < n; ++in) {
                const std::int64_t off =
                    (static_cast<std::int64_t>(in) * num_features_ + f) * spatial;
                const S* g = grad_out.data() + off;
                const S* xh = xhat_.data() + off;
                for (std::int64_t i = 0; i < spatial; ++i) {
                    sum_g += static_cast<double>(g[i]);
                    sum_gx += static_cast<double>(g[i]) * static_cast<double>(xh[i]);
                }
            }
            const double inv = inv_std_[static_cast<std::size_t>(f)];
            const double mg = sum_g / m, mgx = sum_gx / m;
            for (int in = 0; in < n; ++in) {
                const std::int64_t off =
                    (static_cast<std::int64_t>(in) * num_features_ + f) * spatial;
                const S* g = grad_out.data() + off;
                const S* xh = xhat_.data() + off;
                S* gi = grad_in.data() + off;
                for (std::int64_t i = 0; i < spatial; ++i)
                    gi[i] = static_cast<S>(inv * (static_cast<double>(g[i]) - mg -
                                                  static_cast<double>(xh[i]) * mgx));
            }
        }
        return grad_in;
    }

    void collect_stats(const std::string& prefix, std::vector<StatRef<S>>& out) {
        out.push_back({prefix + ".running_mean", &running_mean_});
        out.push_back({prefix + ".running_var", &running_var_});
    }

    int num_features() const { return num_features_; }
    double epsilon() const { return epsilon_; }
    double momentum() const { return momentum_; }
    Tensor<S>& running_mean() { return running_mean_; }
    Tensor<S>& running_var() { return running_var_; }

private:
    void fill_normalized(const Tensor<S>& x, Tensor<S>& y, int f, int n, std::int64_t spatial,
                         double mean, double inv) {
        for (int in = 0; in < n; ++in) {
            const std::int64_t off = (static_cast<std::int64_t>(in) * num_features_ + f) * spatial;
            const S* src = x.data() + off;
            S* dst = y.data() + off;
            for (std::int64_t i = 0; i < spatial; ++i)
                dst[i] = static_cast<S>((static_cast<double>(src[i]) - mean) * inv);
        }
    }

    int num_features_ = 0;
    double epsilon_ = 1e-5;
    double momentum_ = 0.1;
    Tensor<S> running_mean_, running_var_;

    Mode mode_ = Mode::kInference;
    std::int64_t count_ = 0;
    std::vector<double> mean_, inv_std_, inference_inv_std_;
    Tensor<S> xhat_;
};

// ---------------------------------------------------------------------------
// Dense layer
// ---------------------------------------------------------------------------

template <class S>
class Dense {
public:
    Dense() = default;

    Dense(int in_features, int out_features)
        : in_features_(in_features),
          out_features_(out_features),
          weights_({out_features, in_features}),
          bias_({out_features}),
          grad_weights_({out_features, in_features}),
          grad_bias_({out_features}) {}

    void init_params(std::mt19937_64& rng) {
        init_uniform_fan_in(weights_, in_features_, rng);
        bias_.fill(S(0));
    }

    Tensor<S> forward(const Tensor<S>& x) {
        if (x.rank() != 2 || x.dim(1) != in_features_)
            throw ValidationError("dense input shape mismatch: " + x.shape_str());
        input_ = x;
        const int n = x.dim(0);
        Tensor<S> y({n, out_features_});
        for (int in = 0; in < n; ++in) {
            const S* xr = x.data() + static_cast<std::int64_t>(in) * in_features_;
            for (int k = 0; k < out_features_; ++k) {
                const S* wr = weights_.data() + static_cast<std::int64_t>(k) * in_features_;
                S acc = bias_[k];
                for (int f = 0; f < in_features_; ++f) acc += wr[f] * xr[f];
                y.at(in, k) = acc;
            }
        }
        return y;
    }

    Tensor<S> backward(const Tensor<S>& grad_out) {
        const int n = input_.dim(0);
        if (grad_out.rank() != 2 || grad_out.dim(0) != n || grad_out.dim(1) != out_features_)
            throw ValidationError("dense backward shape mismatch");
        Tensor<S> grad_in({n, in_features_});
        for (int in = 0; in < n; ++in) {
            const S* xr = input_.data() + static_cast<std::int64_t>(in) * in_features_;
            S* gxr = grad_in.data() + static_cast<std::int64_t>(in) * in_features_;
            for (int k = 0; k < out_features_; ++k) {
                const S g = grad_out.at(in, k);
                const S* wr = weights_.data() + static_cast<std::int64_t>(k) * in_features_;
                S* gwr = grad_weights_.data() + static_cast<std::int64_t>(k) * in_features_;
                for (int f = 0; f < in_features_; ++f) {
                    gxr[f] += g * wr[f];
                    gwr[f] += g * xr[f];
                }
                grad_bias_[k] += g;
            }
        }
        return grad_in;
    }

    void zero_grad() {
        grad_weights_.fill(S(0));
        grad_bias_.fill(S(0));
    }

    void collect_params(const std::string& prefix, std::vector<ParamRef<S>>& out) {
        out.push_back({prefix + ".weight", &weights_, &grad_weights_});
        out.push_back({prefix + ".bias", &bias_, &grad_bias_});
    }

    std::int64_t param_count() const { return weights_.numel() + bias_.numel(); }

    int in_features() const { return in_features_; }
    int out_features() const { return out_features_; }
    Tensor<S>& weights() { return weights_; }
    Tensor<S>& bias() { return bias_; }

private:
    int in_features_ = 0, out_features_ = 0;
    Tensor<S> weights_, bias_;
    Tensor<S> grad_weights_, grad_bias_;
    Tensor<S> input_;
};

// ---------------------------------------------------------------------------
// Mean pooling over the last (time) axis of an [N x C x H x W] tensor
// ---------------------------------------------------------------------------

template <class S>
class MeanPool {
public:
    MeanPool() = default;
    MeanPool(int pool_len, int stride) : pool_len_(pool_len), stride_(stride) {
        if (pool_len < 1 || stride < 1) throw ValidationError("pool dims must be positive");
    }

    Tensor<S> forward(const Tensor<S>& x) {
        if (x.rank() != 4) throw ValidationError("pool input must be [N x C x H x W]");
        const int w = x.dim(3);
        if (w < pool_len_)
            throw ValidationError("pool window " + std::to_string(pool_len_) +
                                  " longer than input width " + std::to_string(w));
        in_shape_ = x.shape();
        const int n = x.dim(0), c = x.dim(1), h = x.dim(2);
        const int ow = (w - pool_len_) / stride_ + 1;
        Tensor<S> y({n, c, h, ow});
        const S inv = S(1) / static_cast<S>(pool_len_);
        const std::int64_t rows = static_cast<std::int64_t>(n) * c * h;
        for (std::int64_t r = 0; r < rows; ++r) {
            const S* xr = x.data() + r * w;
            S* yr = y.data() + r * ow;
            for (int o = 0; o < ow; ++o) {
                S acc = S(0);
                const S* win = xr + static_cast<std::int64_t>(o) * stride_;
                for (int i = 0; i < pool_len_; ++i) acc += win[i];
                yr[o] = acc * inv;
            }
        }
        return y;
    }

    Tensor<S> backward(const Tensor<S>& grad_out) {
        Tensor<S> grad_in(in_shape_);
        const int w = in_shape_[3];
        const int ow = grad_out.dim(3);
        const S inv = S(1) / static_cast<S>(pool_len_);
        const std::int64_t rows =
            static_cast<std::int64_t>(in_shape_[0]) * in_shape_[1] * in_shape_[2];
        for (std::int64_t r = 0; r < rows; ++r) {
            const S* gyr = grad_out.data() + r * ow;
            S* gxr = grad_in.data() + r * w;
            for (int o = 0; o < ow; ++o) {
                const S g = gyr[o] * inv;
                S* win = gxr + static_cast<std::int64_t>(o) * stride_;
                for (int i = 0; i < pool_len_; ++i) win[i] += g;
            }
        }
        return grad_in;
    }

    int pool_len() const { return pool_len_; }
    int stride() const { return stride_; }

private:
    int pool_len_ = 1, stride_ = 1;
    std::vector<int> in_shape_;
};

// ---------------------------------------------------------------------------
// Elementwise activations
// ---------------------------------------------------------------------------

template <class S>
class Square {
public:
    Tensor<S> forward(const Tensor<S>& x) {
        input_ = x;
        Tensor<S> y(x.shape());
        for (std::int64_t i = 0; i < x.numel(); ++i) y[i] = x[i] * x[i];
        return y;
    }
    Tensor<S> backward(const Tensor<S>& grad_out) {
        Tensor<S> grad_in(input_.shape());
        for (std::int64_t i = 0; i < grad_in.numel(); ++i)
            grad_in[i] = S(2) * input_[i] * grad_out[i];
        return grad_in;
    }

private:
    Tensor<S> input_;
};

/// log(max(x, floor)); keeps the pooled squared activations away from -inf.
template <class S>
class SafeLog {
public:
    explicit SafeLog(double floor = 1e-6) : floor_(floor) {}

    Tensor<S> forward(const Tensor<S>& x) {
        input_ = x;
        Tensor<S> y(x.shape());
        const S f = static_cast<S>(floor_);
        for (std::int64_t i = 0; i < x.numel(); ++i) y[i] = std::log(std::max(x[i], f));
        return y;
    }
    Tensor<S> backward(const Tensor<S>& grad_out) {
        Tensor<S> grad_in(input_.shape());
        const S f = static_cast<S>(floor_);
        for (std::int64_t i = 0; i < grad_in.numel(); ++i)
            grad_in[i] = input_[i] > f ? grad_out[i] / input_[i] : S(0);
        return grad_in;
    }

private:
    double floor_ = 1e-6;
    Tensor<S> input_;
};

/// Inverted dropout: scales kept activations by 1/(1-p) at training time,
/// identity at inference.
template <class S>
class Dropout {
public:
    Dropout() = default;
    explicit Dropout(double p) : p_(p) {
        if (p < 0.0 || p >= 1.0) throw ValidationError("dropout p must be in [0,1)");
    }

    Tensor<S> forward(const Tensor<S>& x, Mode mode, std::mt19937_64& rng) {
        if (mode == Mode::kInference || p_ == 0.0) {
            active_ = false;
            return x;
        }
        active_ = true;
        mask_.assign(static_cast<std::size_t>(x.numel()), S(0));
        const S scale = static_cast<S>(1.0 / (1.0 - p_));
        std::uniform_real_distribution<double> dist(0.0, 1.0);
        Tensor<S> y(x.shape());
        for (std::int64_t i = 0; i < x.numel(); ++i) {
            if (dist(rng) >= p_) {
                mask_[static_cast<std::size_t>(i)] = scale;
                y[i] = x[i] * scale;
            }
        }
        return y;
    }

    Tensor<S> backward(const Tensor<S>& grad_out) {
        if (!active_) return grad_out;
        Tensor<S> grad_in(grad_out.shape());
        for (std::int64_t i = 0; i < grad_in.numel(); ++i)
            grad_in[i] = grad_out[i] * mask_[static_cast<std::size_t>(i)];
        return grad_in;
    }

    double p() const { return p_; }

private:
    double p_ = 0.0;
    bool active_ = false;
    std::vector<S> mask_;
};

// ---------------------------------------------------------------------------
// Softmax cross-entropy
// ---------------------------------------------------------------------------

template <class S>
struct SoftmaxCrossEntropyResult {
    double loss = 0.0;
    Tensor<S> grad_logits;
};

/// Mean negative log-likelihood with a max-shifted softmax.
/// grad = (softmax - one_hot) / N.
template <class S>
SoftmaxCrossEntropyResult<S> softmax_cross_entropy(const Tensor<S>& logits,
                                                   const std::vector<int>& labels) {
    if (logits.rank() != 2) throw ValidationError("logits must be [N x K]");
    const int n = logits.dim(0), k = logits.dim(1);
    if (static_cast<int>(labels.size()) != n)
        throw ValidationError("label count does not match batch size");

    SoftmaxCrossEntropyResult<S> res;
    res.grad_logits = Tensor<S>({n, k});
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const int label = labels[static_cast<std::size_t>(i)];
        if (label < 0 || label >= k)
            throw ValidationError("label " + std::to_string(label) + " out of range [0," +
                                  std::to_string(k) + ")");
        const S* row = logits.data() + static_cast<std::int64_t>(i) * k;
        double mx = static_cast<double>(row[0]);
        for (int j = 1; j < k; ++j) mx = std::max(mx, static_cast<double>(row[j]));
        double denom = 0.0;
        for (int j = 0; j < k; ++j) denom += std::exp(static_cast<double>(row[j]) - mx);
        const double log_denom = std::log(denom);
        total += -(static_cast<double>(row[label]) - mx - log_denom);
        for (int j = 0; j < k; ++j) {
            const double p = std::exp(static_cast<double>(row[j]) - mx) / denom;
            const double g = (p - (j == label ? 1.0 : 0.0)) / static_cast<double>(n);
            res.grad_logits.at(i, j) = static_cast<S>(g);
        }
    }
    res.loss = total / static_cast<double>(n);
    if (!std::isfinite(res.loss)) throw NumericError("non-finite cross-entropy loss");
    return res;
}

}  // namespace trm
