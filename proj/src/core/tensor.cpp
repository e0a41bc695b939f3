// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "latentedit/core/tensor.hpp"
#include "latentedit/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

namespace latentedit {

    std::string shape_to_string(const Shape& shape) {
        std::ostringstream os;
        os << '[';
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i)
                os << ", ";
            os << shape[i];
        }
        os << ']';
        return os.str();
    }

    std::size_t shape_numel(const Shape& shape) {
        return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    }

    Tensor::Tensor(Shape shape, double fill)
        : shape_(std::move(shape)),
          values_(shape_numel(shape_), fill) {}

    Tensor::Tensor(Shape shape, std::vector<double> values)
        : shape_(std::move(shape)),
          values_(std::move(values)) {
        if (values_.size() != shape_numel(shape_)) {
            throw ShapeError("tensor of shape " + shape_to_string(shape_) + " cannot hold " +
                             std::to_string(values_.size()) + " values");
        }
    }

    Tensor Tensor::randn(const Shape& shape, Rng& rng, double stddev) {
        Tensor t(shape);
        std::normal_distribution<double> dist(0.0, stddev);
        for (auto& v : t.values_)
            v = dist(rng);
        return t;
    }

    Tensor Tensor::uniform(const Shape& shape, Rng& rng, double lo, double hi) {
        Tensor t(shape);
        std::uniform_real_distribution<double> dist(lo, hi);
        for (auto& v : t.values_)
            v = dist(rng);
        return t;
    }

    std::size_t Tensor::dim(std::size_t axis) const {
        if (axis >= shape_.size())
            throw IndexError("axis " + std::to_string(axis) + " out of range for " + shape_str());
        return shape_[axis];
    }

    double& Tensor::at(std::size_t i, std::size_t j) { return values_[i * shape_[1] + j]; }
    double Tensor::at(std::size_t i, std::size_t j) const { return values_[i * shape_[1] + j]; }

    double& Tensor::at(std::size_t i, std::size_t j, std::size_t k) {
        return values_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double Tensor::at(std::size_t i, std::size_t j, std::size_t k) const {
        return values_[(i * shape_[1] + j) * shape_[2] + k];
    }

    Tensor Tensor::reshaped(Shape shape) const {
        if (shape_numel(shape) != values_.size())
            throw ShapeError("cannot reshape " + shape_str() + " to " + shape_to_string(shape));
        return Tensor(std::move(shape), values_);
    }

    Tensor& Tensor::operator+=(const Tensor& other) {
        require_same_shape(*this, other, "tensor +=");
        for (std::size_t i = 0; i < values_.size(); ++i)
            values_[i] += other.values_[i];
        return *this;
    }

    Tensor& Tensor::operator-=(const Tensor& other) {
        require_same_shape(*this, other, "tensor -=");
        for (std::size_t i = 0; i < values_.size(); ++i)
            values_[i] -= other.values_[i];
        return *this;
    }

    Tensor& Tensor::operator*=(double s) {
        for (auto& v : values_)
            v *= s;
        return *this;
    }

    Tensor& Tensor::add_scaled(const Tensor& other, double s) {
        require_same_shape(*this, other, "tensor add_scaled");
        for (std::size_t i = 0; i < values_.size(); ++i)
            values_[i] += s * other.values_[i];
        return *this;
    }

    Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
    Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
    Tensor operator*(Tensor a, double s) { return a *= s; }
    Tensor operator*(double s, Tensor a) { return a *= s; }

    void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
        if (!a.same_shape(b)) {
            throw ShapeError(std::string(what) + ": shape mismatch " + a.shape_str() + " vs " +
                             b.shape_str());
        }
    }

    Tensor hadamard(const Tensor& a, const Tensor& b) {
        require_same_shape(a, b, "hadamard");
        Tensor out = a;
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] *= b[i];
        return out;
    }

    double dot(const Tensor& a, const Tensor& b) {
        require_same_shape(a, b, "dot");
        double acc = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
            acc += a[i] * b[i];
        return acc;
    }

    double sum(const Tensor& a) {
        double acc = 0.0;
        for (double v : a.values())
            acc += v;
        return acc;
    }

    double mean(const Tensor& a) {
        return a.empty() ? 0.0 : sum(a) / static_cast<double>(a.size());
    }

    double max_abs(const Tensor& a) {
        double m = 0.0;
        for (double v : a.values())
            m = std::max(m, std::abs(v));
        return m;
    }

    double max_abs_diff(const Tensor& a, const Tensor& b) {
        require_same_shape(a, b, "max_abs_diff");
        double m = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
            m = std::max(m, std::abs(a[i] - b[i]));
        return m;
    }

    bool all_finite(const Tensor& a) {
        return std::all_of(a.values().begin(), a.values().end(),
                           [](double v) { return std::isfinite(v); });
    }

    bool bitwise_equal(const Tensor& a, const Tensor& b) {
        if (!a.same_shape(b))
            return false;
        return a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
    }

    std::uint64_t checksum(const Tensor& a) {
        std::uint64_t h = 1469598103934665603ull;
        const auto* bytes = reinterpret_cast<const unsigned char*>(a.data());
        for (std::size_t i = 0; i < a.size() * sizeof(double); ++i) {
            h ^= bytes[i];
            h *= 1099511628211ull;
        }
        return h;
    }

} // namespace latentedit
