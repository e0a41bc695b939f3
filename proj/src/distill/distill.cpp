// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "latentedit/distill/distill.hpp"
#include "latentedit/core/error.hpp"

#include <cmath>
#include <json.hpp>

namespace latentedit {

    namespace {

        void require_image(const Tensor& x, const char* what) {
            if (x.ndim() != 3 || x.dim(2) != 3)
                throw ShapeError(std::string(what) + " must be {H, W, 3}, got " + x.shape_str());
        }

        void require_depth_for(const Tensor& d, const Tensor& image, const char* what) {
            if (d.shape() != Shape{image.dim(0), image.dim(1)})
                throw ShapeError(std::string(what) + " must be {H, W} matching the image, got " + d.shape_str());
        }

        double mean_square(const Tensor& a) {
            double acc = 0.0;
            for (double v : a.values())
                acc += v * v;
            return a.empty() ? 0.0 : acc / static_cast<double>(a.size());
        }

        // lambda * weight(t) * (cfg - eps), with the mean squared residual as its diagnostic.
        Tensor weighted_sds(const NoisePrediction& pred, const Tensor& eps, double lambda,
                            const TimestepWeight& t_weight, double& diag) {
            Tensor grad = sds_grad(pred, eps);
            diag = mean_square(grad);
            grad *= lambda * (t_weight ? t_weight(pred.t) : 1.0);
            return grad;
        }

    } // namespace

    bool GradientBundle::finite() const { return all_finite(d_image) && all_finite(d_depth); }

    Tensor sds_grad(const NoisePrediction& eps_star, const Tensor& eps) {
        require_same_shape(eps_star.eps_hat, eps, "sds_grad");
        return eps_star.eps_hat - eps;
    }

    double loss_reg_global(const Tensor& d_e, const Tensor& d_s) {
        require_same_shape(d_e, d_s, "loss_reg_global");
        return mean_square(d_e - d_s);
    }

    Tensor loss_reg_global_grad(const Tensor& d_e, const Tensor& d_s) {
        require_same_shape(d_e, d_s, "loss_reg_global");
        Tensor g = d_e - d_s;
        g *= 2.0 / static_cast<double>(g.size());
        return g;
    }

    RegLocalResult loss_reg_local(const Tensor& x_s, const Tensor& x_e, const Tensor& d_s, const Tensor& d_e,
                                  const EditMask& mask, const LossWeights& w) {
        require_image(x_s, "x_s");
        require_same_shape(x_s, x_e, "loss_reg_local images");
        require_depth_for(d_s, x_s, "d_s");
        require_same_shape(d_s, d_e, "loss_reg_local depths");
        require_depth_for(mask.m, x_s, "mask");
        for (double v : mask.m.values())
            if (!(v >= 0.0 && v <= 1.0))
                throw InputError("mask values must lie in [0, 1]");

        const std::size_t h = x_s.dim(0), wd = x_s.dim(1);
        const double inv_p = 1.0 / static_cast<double>(h * wd);
        RegLocalResult r{0.0, Tensor(x_s.shape()), Tensor(d_s.shape())};
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < wd; ++x) {
                const double keep = 1.0 - mask.m.at(y, x);
                double photo = 0.0;
                for (std::size_t c = 0; c < 3; ++c) {
                    const double diff = x_e.at(y, x, c) - x_s.at(y, x, c);
                    photo += diff * diff;
                    r.d_image.at(y, x, c) = 2.0 * keep * w.lambda_photo * diff * inv_p;
                }
                const double dd = d_e.at(y, x) - d_s.at(y, x);
                r.d_depth.at(y, x) = 2.0 * keep * w.lambda_depth * dd * inv_p;
                r.value += keep * (w.lambda_photo * photo + w.lambda_depth * dd * dd);
            }
        }
        r.value *= inv_p;
        return r;
    }

    GradientBundle global_edit_gradients(const DiffusionPrior& ti2i, const Tensor& x_s, const Tensor& x_e,
                                         const Tensor& d_s, const Tensor& d_e, const std::string& y, int t,
                                         const Tensor& eps, const GuidanceConfig& g, const LossWeights& w,
                                         const LossToggles& toggles, const TimestepWeight& t_weight) {
        require_image(x_e, "x_e");
        require_same_shape(x_s, x_e, "global_edit_gradients images");
        require_depth_for(d_e, x_e, "d_e");
        require_same_shape(d_s, d_e, "global_edit_gradients depths");

        GradientBundle b{Tensor(x_e.shape()), Tensor(d_e.shape()), {}};
        if (toggles.ti2i) {
            const Tensor x_t = noise_sample(x_e, ti2i.schedule(), t, eps);
            double diag = 0.0;
            b.d_image += weighted_sds(cfg_ti2i(ti2i, x_t, x_s, y, t, g), eps, w.lambda_ti2i, t_weight, diag);
            b.diagnostics["sds_ti2i"] = diag;
        }
        if (toggles.reg) {
            b.d_depth.add_scaled(loss_reg_global_grad(d_e, d_s), w.lambda_reg_global);
            b.diagnostics["reg_global"] = w.lambda_reg_global * loss_reg_global(d_e, d_s);
        }
        return b;
    }

    GradientBundle local_edit_gradients(const DiffusionPrior& ti2i, const DiffusionPrior& t2i, const Tensor& x_s,
                                        const Tensor& x_e, const Tensor& d_s, const Tensor& d_e,
                                        const std::string& y, const std::optional<std::string>& y_e,
                                        const EditMask* mask, int t, const Tensor& eps, const GuidanceConfig& g,
                                        const LossWeights& w, const LossToggles& toggles,
                                        const TimestepWeight& t_weight) {
        if (toggles.t2i && !y_e)
            throw InstructionError("local edit needs a target description");
        if (toggles.reg && toggles.mask && !mask)
            throw InstructionError("local edit needs an edit mask");
        require_image(x_e, "x_e");
        require_same_shape(x_s, x_e, "local_edit_gradients images");
        require_depth_for(d_e, x_e, "d_e");
        require_same_shape(d_s, d_e, "local_edit_gradients depths");

        GradientBundle b{Tensor(x_e.shape()), Tensor(d_e.shape()), {}};
        Tensor x_t;
        if (toggles.ti2i || toggles.t2i)
            x_t = noise_sample(x_e, ti2i.schedule(), t, eps);
        // Both priors are queried at the same t with the same noised render.
        if (toggles.ti2i) {
            double diag = 0.0;
            b.d_image += weighted_sds(cfg_ti2i(ti2i, x_t, x_s, y, t, g), eps, w.lambda_ti2i, t_weight, diag);
            b.diagnostics["sds_ti2i"] = diag;
        }
        if (toggles.t2i) {
            double diag = 0.0;
            b.d_image += weighted_sds(cfg_t2i(t2i, x_t, *y_e, t, g), eps, w.lambda_t2i, t_weight, diag);
            b.diagnostics["sds_t2i"] = diag;
        }
        if (toggles.reg) {
            const EditMask none{Tensor(d_e.shape())};
            const RegLocalResult r = loss_reg_local(x_s, x_e, d_s, d_e, toggles.mask ? *mask : none, w);
            b.d_image += r.d_image;
            b.d_depth += r.d_depth;
            b.diagnostics["reg_local"] = r.value;
        }
        return b;
    }

    int sample_timestep(Rng& rng, int steps, double lo, double hi) {
        if (steps <= 0 || !(lo >= 0.0) || !(hi <= 1.0) || lo > hi)
            throw ConfigError("invalid timestep range");
        const int a = static_cast<int>(std::ceil(lo * steps));
        const int b = static_cast<int>(std::floor(hi * steps));
        if (a > b)
            throw ConfigError("empty timestep range");
        return std::uniform_int_distribution<int>(a, b)(rng);
    }

    void MetricsSink::record(long step, int epoch, int t, const std::map<std::string, double>& terms) {
        nlohmann::json j{{"step", step}, {"epoch", epoch}, {"t", t}};
        for (const auto& [k, v] : terms)
            j[k] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
        std::lock_guard lock(mu_);
        ++records_;
        if (out_)
            *out_ << j.dump() << '\n';
    }

} // namespace latentedit
