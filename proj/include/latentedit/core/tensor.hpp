// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace latentedit {

    using Shape = std::vector<std::size_t>;

    /// Seeded generator used by every stochastic operation.
    using Rng = std::mt19937_64;

    std::string shape_to_string(const Shape& shape);
    std::size_t shape_numel(const Shape& shape);

    /// Dense row-major array of doubles. Images are {H, W, 3}, depth maps
    /// {H, W}, latents {D, C}.
    class Tensor {
    public:
        Tensor() = default;
        explicit Tensor(Shape shape, double fill = 0.0);
        Tensor(Shape shape, std::vector<double> values);

        static Tensor zeros(const Shape& shape) { return Tensor(shape, 0.0); }
        static Tensor full(const Shape& shape, double value) { return Tensor(shape, value); }
        static Tensor randn(const Shape& shape, Rng& rng, double stddev = 1.0);
        static Tensor uniform(const Shape& shape, Rng& rng, double lo, double hi);

        const Shape& shape() const { return shape_; }
        std::size_t ndim() const { return shape_.size(); }
        std::size_t dim(std::size_t axis) const;
        std::size_t size() const { return values_.size(); }
        bool empty() const { return values_.empty(); }

        std::span<double> values() { return values_; }
        std::span<const double> values() const { return values_; }
        double* data() { return values_.data(); }
        const double* data() const { return values_.data(); }

        double& operator[](std::size_t i) { return values_[i]; }
        double operator[](std::size_t i) const { return values_[i]; }

        double& at(std::size_t i, std::size_t j);
        double at(std::size_t i, std::size_t j) const;
        double& at(std::size_t i, std::size_t j, std::size_t k);
        double at(std::size_t i, std::size_t j, std::size_t k) const;

        Tensor reshaped(Shape shape) const;

        Tensor& operator+=(const Tensor& other);
        Tensor& operator-=(const Tensor& other);
        Tensor& operator*=(double s);
        /// this += s * other
        Tensor& add_scaled(const Tensor& other, double s);

        bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
        std::string shape_str() const { return shape_to_string(shape_); }

        bool operator==(const Tensor& other) const = default;

    private:
        Shape shape_;
        std::vector<double> values_;
    };

    Tensor operator+(Tensor a, const Tensor& b);
    Tensor operator-(Tensor a, const Tensor& b);
    Tensor operator*(Tensor a, double s);
    Tensor operator*(double s, Tensor a);

    /// Throws ShapeError naming `what` when the shapes differ.
    void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

    Tensor hadamard(const Tensor& a, const Tensor& b);
    double dot(const Tensor& a, const Tensor& b);
    double sum(const Tensor& a);
    double mean(const Tensor& a);
    double max_abs(const Tensor& a);
    double max_abs_diff(const Tensor& a, const Tensor& b);
    bool all_finite(const Tensor& a);

    /// Bitwise equality of shapes and values (NaN payloads included).
    bool bitwise_equal(const Tensor& a, const Tensor& b);

    /// 64-bit FNV-1a over the raw bytes of the values; used as a parameter checksum.
    std::uint64_t checksum(const Tensor& a);

} // namespace latentedit
