#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rxai {

template <typename S>
using ArrayX = Eigen::Array<S, Eigen::Dynamic, 1>;
template <typename S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <typename S>
using MatRM = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using VecXf = VecX<float>;

inline std::string shape_str(std::span<const int> shape) {
    std::string s;
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) s += 'x';
        s += std::to_string(shape[i]);
    }
    return s.empty() ? "scalar" : s;
}

/// Dense tensor with contiguous storage. Layout is channel-major with
/// row-major planes: element (k, i, j) of a KxHxW tensor lives at
/// (k*H + i)*W + j.
template <typename S>
struct BasicTensor {
    std::vector<int> shape;
    ArrayX<S> data;

    BasicTensor() = default;

    explicit BasicTensor(std::vector<int> shape_) : shape(std::move(shape_)) {
        data = ArrayX<S>::Zero(count(shape));
    }

    BasicTensor(std::vector<int> shape_, ArrayX<S> values)
        : shape(std::move(shape_)), data(std::move(values)) {
        if (data.size() != count(shape))
            throw std::invalid_argument("tensor: " + std::to_string(data.size()) +
                                        " values for shape " + shape_str(shape));
    }

    static BasicTensor zeros(std::vector<int> shape_) { return BasicTensor(std::move(shape_)); }

    static BasicTensor full(std::vector<int> shape_, S value) {
        BasicTensor t(std::move(shape_));
        t.data.setConstant(value);
        return t;
    }

    static int64_t count(std::span<const int> shape_) {
        int64_t n = 1;
        for (int d : shape_) {
            if (d <= 0) throw std::invalid_argument("tensor: nonpositive dimension in shape " + shape_str(shape_));
            n *= d;
        }
        return n;
    }

    int64_t size() const { return data.size(); }
    int rank() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }

    bool same_shape(const BasicTensor& o) const { return shape == o.shape; }

    // 3-D accessors; shape is {K, H, W}.
    S& at(int k, int i, int j) { return data[(static_cast<int64_t>(k) * dim(1) + i) * dim(2) + j]; }
    S at(int k, int i, int j) const { return data[(static_cast<int64_t>(k) * dim(1) + i) * dim(2) + j]; }

    /// Row-major HxW view of channel k of a 3-D tensor.
    Eigen::Map<MatRM<S>> channel(int k) {
        const int h = dim(1), w = dim(2);
        return Eigen::Map<MatRM<S>>(data.data() + static_cast<int64_t>(k) * h * w, h, w);
    }
    Eigen::Map<const MatRM<S>> channel(int k) const {
        const int h = dim(1), w = dim(2);
        return Eigen::Map<const MatRM<S>>(data.data() + static_cast<int64_t>(k) * h * w, h, w);
    }

    /// Row-major view of a 2-D tensor.
    Eigen::Map<MatRM<S>> plane() { return Eigen::Map<MatRM<S>>(data.data(), dim(0), dim(1)); }
    Eigen::Map<const MatRM<S>> plane() const {
        return Eigen::Map<const MatRM<S>>(data.data(), dim(0), dim(1));
    }

    Eigen::Map<VecX<S>> vec() { return Eigen::Map<VecX<S>>(data.data(), data.size()); }
    Eigen::Map<const VecX<S>> vec() const { return Eigen::Map<const VecX<S>>(data.data(), data.size()); }

    template <typename T>
    BasicTensor<T> cast() const {
        return BasicTensor<T>(shape, data.template cast<T>());
    }
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

/// feature (KxHxW) * mask (HxW), mask broadcast over channels.
template <typename S>
BasicTensor<S> hadamard(const BasicTensor<S>& feature, const BasicTensor<S>& mask) {
    if (feature.rank() != 3 || mask.rank() != 2 || feature.dim(1) != mask.dim(0) ||
        feature.dim(2) != mask.dim(1))
        throw std::invalid_argument("hadamard: spatial shape mismatch, feature " +
                                    shape_str(feature.shape) + " vs mask " + shape_str(mask.shape));
    BasicTensor<S> out(feature.shape);
    for (int k = 0; k < feature.dim(0); ++k)
        out.channel(k) = feature.channel(k).cwiseProduct(mask.plane());
    return out;
}

} // namespace rxai
