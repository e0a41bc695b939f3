// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "latentedit/core/schedule.hpp"
#include "latentedit/core/types.hpp"

#include <atomic>
#include <optional>
#include <string>
#include <vector>

namespace latentedit {

    enum class PriorKind {
        TI2I,
        T2I,
        Toy
    };

    std::string to_string(PriorKind kind);

    struct PriorCapabilities {
        bool supports_image_condition = false;
        bool supports_attention_maps = false;
        /// Whether predict_noise may run concurrently on one instance.
        bool concurrent = false;
    };

    struct PriorHandle {
        PriorKind kind = PriorKind::Toy;
        std::string model_id;
        PriorCapabilities capabilities;

        /// TI2I priors must accept an image condition.
        void validate() const;
    };

    struct NoisePrediction {
        Tensor eps_hat;
        int t = 0;
    };

    /// Cross-attention maps for one token at one step, one map per layer/head.
    struct AttentionStack {
        std::vector<Tensor> maps;
        int t = 0;
        std::size_t resolution = 32;

        /// Throws InputError on negative entries or maps of the wrong size.
        void validate() const;
    };

    /// Editable-region estimate in [0, 1] at render resolution.
    struct EditMask {
        Tensor m;
    };

    /*
     * A 2D diffusion denoiser consulted for single-step noise predictions.
     *
     * Images are {H, W, 3}. Conditions are optional; an absent image or text
     * means the null condition used by classifier-free guidance. Prior weights
     * are never updated through this interface.
     */
    class DiffusionPrior {
    public:
        virtual ~DiffusionPrior() = default;

        virtual const PriorHandle& handle() const = 0;
        virtual const NoiseSchedule& schedule() const = 0;

        /// Checks capabilities and finiteness, then runs one denoiser evaluation.
        NoisePrediction predict_noise(const Tensor& x_t, const Tensor* image_cond,
                                      const std::optional<std::string>& text, int t) const;

        /// Raw cross-attention maps between image features and `token` of `text`.
        /// Throws CapabilityError when unsupported and TokenError when `token` is not a word of `text`.
        AttentionStack attention_maps(const Tensor& x_src, const std::string& text,
                                      const std::string& token, int t) const;

    protected:
        virtual Tensor do_predict(const Tensor& x_t, const Tensor* image_cond,
                                  const std::optional<std::string>& text, int t) const = 0;
        virtual AttentionStack do_attention(const Tensor& x_src, const std::string& text,
                                            const std::string& token, int t) const;
    };

    /// True when `token` appears as a whole word of `text` (case-insensitive).
    bool text_contains_token(const std::string& text, const std::string& token);

    /// eps(0,0) + gamma_I (eps(x_s,0) - eps(0,0)) + gamma_T (eps(x_s,y) - eps(x_s,0)).
    Tensor combine_ti2i(const Tensor& eps_uncond, const Tensor& eps_image, const Tensor& eps_full,
                        const GuidanceConfig& g);
    /// eps(0) + gamma'_T (eps(y_e) - eps(0)).
    Tensor combine_t2i(const Tensor& eps_uncond, const Tensor& eps_text, const GuidanceConfig& g);

    /// Three-call classifier-free guidance on an image-conditioned editor prior.
    NoisePrediction cfg_ti2i(const DiffusionPrior& prior, const Tensor& x_t, const Tensor& x_src,
                             const std::string& y, int t, const GuidanceConfig& g);
    /// Two-call classifier-free guidance on a text-to-image prior.
    NoisePrediction cfg_t2i(const DiffusionPrior& prior, const Tensor& x_t, const std::string& y_e, int t,
                            const GuidanceConfig& g);

    /// Forwards to another prior and counts denoiser and attention calls.
    class CountingPrior final : public DiffusionPrior {
    public:
        explicit CountingPrior(const DiffusionPrior& inner)
            : inner_(inner) {}

        const PriorHandle& handle() const override { return inner_.handle(); }
        const NoiseSchedule& schedule() const override { return inner_.schedule(); }

        long predict_calls() const { return predict_calls_.load(); }
        long attention_calls() const { return attention_calls_.load(); }
        void reset() {
            predict_calls_ = 0;
            attention_calls_ = 0;
        }

    protected:
        Tensor do_predict(const Tensor& x_t, const Tensor* image_cond, const std::optional<std::string>& text,
                          int t) const override;
        AttentionStack do_attention(const Tensor& x_src, const std::string& text, const std::string& token,
                                    int t) const override;

    private:
        const DiffusionPrior& inner_;
        mutable std::atomic<long> predict_calls_{0};
        mutable std::atomic<long> attention_calls_{0};
    };

} // namespace latentedit
