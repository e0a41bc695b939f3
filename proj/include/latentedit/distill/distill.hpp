// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "latentedit/prior/prior.hpp"

#include <functional>
#include <map>
#include <mutex>
#include <ostream>
#include <string>

namespace latentedit {

    /// Gradients at the rendered edited view plus per-term scalar diagnostics.
    struct GradientBundle {
        Tensor d_image; ///< {H, W, 3}
        Tensor d_depth; ///< {H, W}
        std::map<std::string, double> diagnostics;

        bool finite() const;
    };

    /// eps_hat* - eps. Never differentiated through the prior.
    Tensor sds_grad(const NoisePrediction& eps_star, const Tensor& eps);

    /// mean over pixels of (d_e - d_s)^2.
    double loss_reg_global(const Tensor& d_e, const Tensor& d_s);
    /// d loss_reg_global / d d_e.
    Tensor loss_reg_global_grad(const Tensor& d_e, const Tensor& d_s);

    struct RegLocalResult {
        double value = 0.0;
        Tensor d_image; ///< d / d x_e
        Tensor d_depth; ///< d / d d_e
    };

    /// mean over pixels of (1 - m) * (lambda_photo |x_e - x_s|^2 + lambda_depth (d_e - d_s)^2).
    RegLocalResult loss_reg_local(const Tensor& x_s, const Tensor& x_e, const Tensor& d_s, const Tensor& d_e,
                                  const EditMask& mask, const LossWeights& w);

    /// Terms switched on for a training step. Turning one off reproduces an ablation.
    struct LossToggles {
        bool ti2i = true;
        bool t2i = true;
        bool reg = true;
        /// When false the regularizer covers the whole image (mask treated as zero).
        bool mask = true;

        bool operator==(const LossToggles&) const = default;
    };

    /// Optional weighting of the SDS terms by timestep; unset means 1.
    using TimestepWeight = std::function<double(int t)>;

    GradientBundle global_edit_gradients(const DiffusionPrior& ti2i, const Tensor& x_s, const Tensor& x_e,
                                         const Tensor& d_s, const Tensor& d_e, const std::string& y, int t,
                                         const Tensor& eps, const GuidanceConfig& g, const LossWeights& w,
                                         const LossToggles& toggles = {}, const TimestepWeight& t_weight = {});

    GradientBundle local_edit_gradients(const DiffusionPrior& ti2i, const DiffusionPrior& t2i, const Tensor& x_s,
                                        const Tensor& x_e, const Tensor& d_s, const Tensor& d_e,
                                        const std::string& y, const std::optional<std::string>& y_e,
                                        const EditMask* mask, int t, const Tensor& eps, const GuidanceConfig& g,
                                        const LossWeights& w, const LossToggles& toggles = {},
                                        const TimestepWeight& t_weight = {});

    /// Uniform integer step in [ceil(lo * T), floor(hi * T)].
    int sample_timestep(Rng& rng, int steps, double lo = 0.02, double hi = 0.98);

    /// Line-delimited JSON records {"step", "epoch", "t", <term>: value, ...}.
    class MetricsSink {
    public:
        explicit MetricsSink(std::ostream* out = nullptr) : out_(out) {}

        void record(long step, int epoch, int t, const std::map<std::string, double>& terms);
        long records() const { return records_; }

    private:
        std::ostream* out_;
        std::mutex mu_;
        long records_ = 0;
    };

} // namespace latentedit
