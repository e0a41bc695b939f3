// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "latentedit/core/tensor.hpp"

#include <string>
#include <vector>

namespace latentedit {

    struct ScheduleEntry {
        double alpha;
        double sigma;
    };

    /// Variance tables for the forward process x_t = alpha_t * x + sigma_t * eps
    /// ("signal-times-alpha"), indexed by step 0..T.
    class NoiseSchedule {
    public:
        static constexpr const char* kConvention = "signal-times-alpha";

        /// Validates alpha_0 = 1, sigma_0 = 0, alpha in (0, 1], sigma >= 0 and monotonicity.
        NoiseSchedule(std::vector<double> alphas, std::vector<double> sigmas);

        /// Variance-preserving schedule with sigma_t = t / T; alpha is floored so it stays positive.
        static NoiseSchedule linear_sigma(int steps, double alpha_floor = 1e-4);

        /// Variance-preserving cosine schedule with offset `s`: alphabar(t) = f(t) / f(0),
        /// f(t) = cos^2((t/T + s) / (1 + s) * pi/2). sigma is capped at `sigma_cap`.
        static NoiseSchedule cosine(int steps, double offset, double sigma_cap = 0.9999);

        /// 1024-step cosine schedule whose offset is solved so that sigma_200 = 0.308,
        /// the fixed editor noise level. Replace with checkpoint tables when available.
        static NoiseSchedule shap_e_compatible();

        int steps() const { return static_cast<int>(alphas_.size()) - 1; }
        const std::vector<double>& alphas() const { return alphas_; }
        const std::vector<double>& sigmas() const { return sigmas_; }

        /// Throws IndexError unless 0 <= t <= T.
        ScheduleEntry at(int t) const;

        bool operator==(const NoiseSchedule&) const = default;

    private:
        std::vector<double> alphas_;
        std::vector<double> sigmas_;
    };

    /// Fixed editor timestep tau = 200 of 1024.
    inline constexpr int kDefaultEditorTau = 200;
    inline constexpr double kDefaultEditorSigma = 0.308;

    ScheduleEntry schedule_at(const NoiseSchedule& schedule, int t);

    /// alpha_t * x + sigma_t * eps. Throws ShapeError when the shapes differ.
    Tensor noise_sample(const Tensor& x, const NoiseSchedule& schedule, int t, const Tensor& eps);

} // namespace latentedit
