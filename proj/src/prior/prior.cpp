// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "latentedit/prior/prior.hpp"
#include "latentedit/core/error.hpp"

#include <cctype>

namespace latentedit {

    std::string to_string(PriorKind kind) {
        switch (kind) {
        case PriorKind::TI2I: return "ti2i";
        case PriorKind::T2I: return "t2i";
        case PriorKind::Toy: return "toy";
        }
        return "unknown";
    }

    void PriorHandle::validate() const {
        if (kind == PriorKind::TI2I && !capabilities.supports_image_condition)
            throw CapabilityError("TI2I prior '" + model_id + "' must support image conditioning");
    }

    void AttentionStack::validate() const {
        for (const auto& map : maps) {
            if (map.shape() != Shape{resolution, resolution})
                throw InputError("attention map has shape " + map.shape_str() + ", expected " +
                                 shape_to_string({resolution, resolution}));
            for (double v : map.values()) {
                if (!(v >= 0.0) || !std::isfinite(v))
                    throw InputError("attention maps must be finite and non-negative");
            }
        }
    }

    bool text_contains_token(const std::string& text, const std::string& token) {
        if (token.empty())
            return false;
        const auto lower = [](std::string s) {
            for (auto& ch : s)
                ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
            return s;
        };
        const std::string t = lower(text), w = lower(token);
        std::size_t pos = 0;
        while ((pos = t.find(w, pos)) != std::string::npos) {
            const bool left_ok = pos == 0 || !std::isalnum(static_cast<unsigned char>(t[pos - 1]));
            const std::size_t end = pos + w.size();
            const bool right_ok = end == t.size() || !std::isalnum(static_cast<unsigned char>(t[end]));
            if (left_ok && right_ok)
                return true;
            ++pos;
        }
        return false;
    }

    NoisePrediction DiffusionPrior::predict_noise(const Tensor& x_t, const Tensor* image_cond,
                                                  const std::optional<std::string>& text, int t) const {
        const auto& h = handle();
        if (image_cond && !h.capabilities.supports_image_condition)
            throw CapabilityError("prior '" + h.model_id + "' does not accept an image condition");
        if (image_cond)
            require_same_shape(x_t, *image_cond, "predict_noise image condition");
        if (!all_finite(x_t))
            throw InputError("predict_noise: x_t has non-finite entries");
        schedule().at(t);
        Tensor eps = do_predict(x_t, image_cond, text, t);
        require_same_shape(x_t, eps, "predict_noise output");
        return {std::move(eps), t};
    }

    AttentionStack DiffusionPrior::attention_maps(const Tensor& x_src, const std::string& text,
                                                  const std::string& token, int t) const {
        const auto& h = handle();
        if (!h.capabilities.supports_attention_maps)
            throw CapabilityError("prior '" + h.model_id + "' does not expose attention maps");
        if (!text_contains_token(text, token))
            throw TokenError("token '" + token + "' does not occur in '" + text + "'");
        auto stack = do_attention(x_src, text, token, t);
        stack.validate();
        return stack;
    }

    AttentionStack DiffusionPrior::do_attention(const Tensor&, const std::string&, const std::string&, int) const {
        throw CapabilityError("prior '" + handle().model_id + "' does not expose attention maps");
    }

    Tensor combine_ti2i(const Tensor& eps_uncond, const Tensor& eps_image, const Tensor& eps_full,
                        const GuidanceConfig& g) {
        require_same_shape(eps_uncond, eps_image, "cfg_ti2i");
        require_same_shape(eps_uncond, eps_full, "cfg_ti2i");
        Tensor out(eps_uncond.shape());
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = eps_uncond[i] + g.gamma_image * (eps_image[i] - eps_uncond[i]) +
                     g.gamma_text * (eps_full[i] - eps_image[i]);
        }
        return out;
    }

    Tensor combine_t2i(const Tensor& eps_uncond, const Tensor& eps_text, const GuidanceConfig& g) {
        require_same_shape(eps_uncond, eps_text, "cfg_t2i");
        Tensor out(eps_uncond.shape());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = eps_uncond[i] + g.gamma_text_t2i * (eps_text[i] - eps_uncond[i]);
        return out;
    }

    NoisePrediction cfg_ti2i(const DiffusionPrior& prior, const Tensor& x_t, const Tensor& x_src,
                             const std::string& y, int t, const GuidanceConfig& g) {
        if (!prior.handle().capabilities.supports_image_condition)
            throw CapabilityError("cfg_ti2i needs an image-conditioned prior, got '" +
                                  prior.handle().model_id + "'");
        const auto uncond = prior.predict_noise(x_t, nullptr, std::nullopt, t);
        const auto image = prior.predict_noise(x_t, &x_src, std::nullopt, t);
        const auto full = prior.predict_noise(x_t, &x_src, y, t);
        return {combine_ti2i(uncond.eps_hat, image.eps_hat, full.eps_hat, g), t};
    }

    NoisePrediction cfg_t2i(const DiffusionPrior& prior, const Tensor& x_t, const std::string& y_e, int t,
                            const GuidanceConfig& g) {
        const auto uncond = prior.predict_noise(x_t, nullptr, std::nullopt, t);
        const auto text = prior.predict_noise(x_t, nullptr, y_e, t);
        return {combine_t2i(uncond.eps_hat, text.eps_hat, g), t};
    }

    Tensor CountingPrior::do_predict(const Tensor& x_t, const Tensor* image_cond,
                                     const std::optional<std::string>& text, int t) const {
        ++predict_calls_;
        return inner_.predict_noise(x_t, image_cond, text, t).eps_hat;
    }

    AttentionStack CountingPrior::do_attention(const Tensor& x_src, const std::string& text,
                                               const std::string& token, int t) const {
        ++attention_calls_;
        return inner_.attention_maps(x_src, text, token, t);
    }

} // namespace latentedit
