// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "latentedit/core/schedule.hpp"
#include "latentedit/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace latentedit {

    NoiseSchedule::NoiseSchedule(std::vector<double> alphas, std::vector<double> sigmas)
        : alphas_(std::move(alphas)),
          sigmas_(std::move(sigmas)) {
        if (alphas_.size() != sigmas_.size() || alphas_.size() < 2)
            throw ConfigError("schedule tables must have equal length >= 2");
        if (alphas_.front() != 1.0 || sigmas_.front() != 0.0)
            throw ConfigError("schedule must start at alpha_0 = 1, sigma_0 = 0");
        for (std::size_t t = 0; t < alphas_.size(); ++t) {
            const double a = alphas_[t];
            const double s = sigmas_[t];
            if (!std::isfinite(a) || !std::isfinite(s) || !(a > 0.0) || a > 1.0 || s < 0.0)
                throw ConfigError("schedule entry " + std::to_string(t) + " out of range");
            if (t > 0 && (a > alphas_[t - 1] || s < sigmas_[t - 1]))
                throw ConfigError("schedule is not monotone at step " + std::to_string(t));
        }
    }

    NoiseSchedule NoiseSchedule::linear_sigma(int steps, double alpha_floor) {
        if (steps < 1)
            throw ConfigError("schedule needs at least one step");
        std::vector<double> alphas(steps + 1), sigmas(steps + 1);
        for (int t = 0; t <= steps; ++t) {
            const double s = static_cast<double>(t) / steps;
            sigmas[t] = s;
            alphas[t] = std::max(std::sqrt(std::max(0.0, 1.0 - s * s)), alpha_floor);
        }
        return {std::move(alphas), std::move(sigmas)};
    }

    NoiseSchedule NoiseSchedule::cosine(int steps, double offset, double sigma_cap) {
        if (steps < 1)
            throw ConfigError("schedule needs at least one step");
        const auto f = [&](double t) {
            const double c = std::cos((t / steps + offset) / (1.0 + offset) * std::numbers::pi / 2.0);
            return c * c;
        };
        const double f0 = f(0.0);
        std::vector<double> alphas(steps + 1), sigmas(steps + 1);
        alphas[0] = 1.0;
        sigmas[0] = 0.0;
        for (int t = 1; t <= steps; ++t) {
            const double abar = std::clamp(f(t) / f0, 0.0, 1.0);
            const double sigma = std::min(std::sqrt(1.0 - abar), sigma_cap);
            sigmas[t] = sigma;
            alphas[t] = std::sqrt(1.0 - sigma * sigma);
        }
        return {std::move(alphas), std::move(sigmas)};
    }

    NoiseSchedule NoiseSchedule::shap_e_compatible() {
        constexpr int steps = 1024;
        const auto sigma_at_tau = [&](double offset) {
            const auto f = [&](double t) {
                const double c =
                    std::cos((t / steps + offset) / (1.0 + offset) * std::numbers::pi / 2.0);
                return c * c;
            };
            return std::sqrt(1.0 - f(kDefaultEditorTau) / f(0.0));
        };
        // sigma_tau grows monotonically with the offset on [0, 0.05].
        double lo = 0.0, hi = 0.05;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (sigma_at_tau(mid) > kDefaultEditorSigma)
                hi = mid;
            else
                lo = mid;
        }
        return cosine(steps, 0.5 * (lo + hi));
    }

    ScheduleEntry NoiseSchedule::at(int t) const {
        if (t < 0 || t > steps())
            throw IndexError("timestep " + std::to_string(t) + " outside [0, " +
                             std::to_string(steps()) + "]");
        return {alphas_[t], sigmas_[t]};
    }

    ScheduleEntry schedule_at(const NoiseSchedule& schedule, int t) { return schedule.at(t); }

    Tensor noise_sample(const Tensor& x, const NoiseSchedule& schedule, int t, const Tensor& eps) {
        require_same_shape(x, eps, "noise_sample");
        const auto [alpha, sigma] = schedule.at(t);
        Tensor out(x.shape());
        for (std::size_t i = 0; i < x.size(); ++i)
            out[i] = alpha * x[i] + sigma * eps[i];
        return out;
    }

} // namespace latentedit
