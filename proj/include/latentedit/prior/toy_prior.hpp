// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "latentedit/codec/camera.hpp"
#include "latentedit/prior/prior.hpp"

#include <functional>
#include <map>
#include <memory>

namespace latentedit {

    /// Mean image of the conditional data distribution for one set of conditions.
    using MeanFn = std::function<Tensor(const Tensor& x_t, const Tensor* image_cond,
                                        const std::optional<std::string>& text)>;
    using AttentionFn = std::function<AttentionStack(const Tensor& x_src, const std::string& text,
                                                     const std::string& token, int t)>;
    /// Image-space edit applied by the toy instruction prior.
    using ImageEdit = std::function<Tensor(const Tensor& src)>;

    /*
     * Analytic prior: conditioned on (image, text) the data is N(mu, s^2 I) with
     * mu = mean_fn(...). The MMSE noise predictor for x_t = alpha x + sigma eps is
     *
     *   eps_hat(x_t) = sigma (x_t - alpha mu) / (alpha^2 s^2 + sigma^2)
     *
     * which equals -sigma * grad log p(x_t).
     */
    class GaussianToyPrior final : public DiffusionPrior {
    public:
        GaussianToyPrior(PriorHandle handle, NoiseSchedule schedule, double data_std, MeanFn mean_fn,
                         AttentionFn attention_fn = {});

        const PriorHandle& handle() const override { return handle_; }
        const NoiseSchedule& schedule() const override { return schedule_; }
        double data_std() const { return data_std_; }

        Tensor mean(const Tensor& x_t, const Tensor* image_cond, const std::optional<std::string>& text) const {
            return mean_fn_(x_t, image_cond, text);
        }

        /// Closed-form optimal denoiser output for a Gaussian with mean `mu` and std `s`.
        static Tensor optimal_eps(const Tensor& x_t, const Tensor& mu, double alpha, double sigma, double s);

    protected:
        Tensor do_predict(const Tensor& x_t, const Tensor* image_cond, const std::optional<std::string>& text,
                          int t) const override;
        AttentionStack do_attention(const Tensor& x_src, const std::string& text, const std::string& token,
                                    int t) const override;

    private:
        PriorHandle handle_;
        NoiseSchedule schedule_;
        double data_std_;
        MeanFn mean_fn_;
        AttentionFn attention_fn_;
    };

    /// Multiplies each colour channel by a factor (an exact latent-space shift for the toy codec).
    ImageEdit tint_edit(Vec3 factors);

    /*
     * Toy instruction-following editor prior (TI2I). Means by condition:
     *   (no image, no text)   -> constant `neutral_level` image
     *   (image, no text)      -> the source image
     *   (image, instruction)  -> edits[instruction](source), or the source for unknown instructions
     *   (no image, text)      -> constant `neutral_level` image
     * Attention maps for any word of the instruction are the per-pixel edit
     * magnitude |edit(src) - src| and its square, resampled to 32x32.
     */
    std::unique_ptr<GaussianToyPrior> make_toy_ti2i_prior(NoiseSchedule schedule, double data_std,
                                                          std::map<std::string, ImageEdit> edits,
                                                          double neutral_level = 0.5,
                                                          std::string model_id = "toy-ti2i");

    /// Toy text-to-image prior: a description maps to a constant-colour mean image;
    /// the null text and unknown descriptions map to `neutral_level`.
    std::unique_ptr<GaussianToyPrior> make_toy_t2i_prior(NoiseSchedule schedule, double data_std,
                                                         std::map<std::string, Vec3> description_colors,
                                                         double neutral_level = 0.5,
                                                         std::string model_id = "toy-t2i");

} // namespace latentedit
