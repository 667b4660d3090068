#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "trm/errors.hpp"

namespace trm {

/// Dense row-major tensor. The scalar type selects the precision mode:
/// Tensor<float> is the fast (32-bit) mode used for training, Tensor<double>
/// the checking (64-bit) mode used for gradient checks and oracles.
template <class S>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        std::int64_t n = 1;
        for (int d : shape_) {
            if (d <= 0) throw ValidationError("tensor dims must be positive");
            n *= d;
        }
        data_.assign(static_cast<std::size_t>(n), S(0));
    }

    Tensor(std::vector<int> shape, std::vector<S> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        std::int64_t n = 1;
        for (int d : shape_) {
            if (d <= 0) throw ValidationError("tensor dims must be positive");
            n *= d;
        }
        if (static_cast<std::int64_t>(data_.size()) != n)
            throw ValidationError("tensor data length does not match shape");
    }

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

    const std::vector<int>& shape() const { return shape_; }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    int rank() const { return static_cast<int>(shape_.size()); }

    std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }

    S* data() { return data_.data(); }
    const S* data() const { return data_.data(); }

    S& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    S operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    // Convenience indexers for tests and cold paths; hot loops index manually.
    S& at(int i, int j) { return data_[static_cast<std::size_t>(i) * dim(1) + j]; }
    S at(int i, int j) const { return data_[static_cast<std::size_t>(i) * dim(1) + j]; }
    S& at(int i, int j, int k) {
        return data_[(static_cast<std::size_t>(i) * dim(1) + j) * dim(2) + k];
    }
    S at(int i, int j, int k) const {
        return data_[(static_cast<std::size_t>(i) * dim(1) + j) * dim(2) + k];
    }
    S& at(int n, int c, int h, int w) {
        return data_[((static_cast<std::size_t>(n) * dim(1) + c) * dim(2) + h) * dim(3) + w];
    }
    S at(int n, int c, int h, int w) const {
        return data_[((static_cast<std::size_t>(n) * dim(1) + c) * dim(2) + h) * dim(3) + w];
    }

    void fill(S v) { std::fill(data_.begin(), data_.end(), v); }

    /// In-place shape change; element count must be preserved.
    void reshape(std::vector<int> shape) {
        std::int64_t n = 1;
        for (int d : shape) n *= d;
        if (n != numel()) throw ValidationError("reshape changes element count");
        shape_ = std::move(shape);
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    bool all_finite() const {
        for (S v : data_)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    std::string shape_str() const {
        std::string s = "[";
        for (std::size_t i = 0; i < shape_.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(shape_[i]);
        }
        return s + "]";
    }

private:
    std::vector<int> shape_;
    std::vector<S> data_;
};

template <class S>
Tensor<S> operator*(S a, const Tensor<S>& x) {
    Tensor<S> y = x;
    for (std::int64_t i = 0; i < y.numel(); ++i) y[i] *= a;
    return y;
}

template <class S>
Tensor<S> operator+(const Tensor<S>& x, const Tensor<S>& y) {
    if (!x.same_shape(y)) throw ValidationError("tensor shape mismatch in addition");
    Tensor<S> z = x;
    for (std::int64_t i = 0; i < z.numel(); ++i) z[i] += y[i];
    return z;
}

template <class S, class T>
Tensor<T> cast_tensor(const Tensor<S>& x) {
    Tensor<T> y(x.shape());
    for (std::int64_t i = 0; i < x.numel(); ++i) y[i] = static_cast<T>(x[i]);
    return y;
}

}  // namespace trm
