// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "latentedit/prior/toy_prior.hpp"
#include "latentedit/codec/image_io.hpp"
#include "latentedit/core/error.hpp"

#include <cmath>

namespace latentedit {

    GaussianToyPrior::GaussianToyPrior(PriorHandle handle, NoiseSchedule schedule, double data_std, MeanFn mean_fn,
                                       AttentionFn attention_fn)
        : handle_(std::move(handle)),
          schedule_(std::move(schedule)),
          data_std_(data_std),
          mean_fn_(std::move(mean_fn)),
          attention_fn_(std::move(attention_fn)) {
        handle_.validate();
        if (!(data_std_ > 0.0))
            throw ConfigError("toy prior data std must be positive");
        if (!mean_fn_)
            throw ConfigError("toy prior needs a mean function");
        handle_.capabilities.supports_attention_maps = static_cast<bool>(attention_fn_);
        handle_.capabilities.concurrent = true;
    }

    Tensor GaussianToyPrior::optimal_eps(const Tensor& x_t, const Tensor& mu, double alpha, double sigma, double s) {
        require_same_shape(x_t, mu, "toy prior mean");
        const double scale = sigma / (alpha * alpha * s * s + sigma * sigma);
        Tensor out(x_t.shape());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = (x_t[i] - alpha * mu[i]) * scale;
        return out;
    }

    Tensor GaussianToyPrior::do_predict(const Tensor& x_t, const Tensor* image_cond,
                                        const std::optional<std::string>& text, int t) const {
        const auto [alpha, sigma] = schedule_.at(t);
        return optimal_eps(x_t, mean_fn_(x_t, image_cond, text), alpha, sigma, data_std_);
    }

    AttentionStack GaussianToyPrior::do_attention(const Tensor& x_src, const std::string& text,
                                                  const std::string& token, int t) const {
        return attention_fn_(x_src, text, token, t);
    }

    ImageEdit tint_edit(Vec3 factors) {
        return [factors](const Tensor& src) {
            if (src.ndim() != 3 || src.dim(2) != 3)
                throw ShapeError("tint_edit expects an {H, W, 3} image");
            Tensor out = src;
            for (std::size_t i = 0; i < out.size(); ++i)
                out[i] *= factors[i % 3];
            return out;
        };
    }

    std::unique_ptr<GaussianToyPrior> make_toy_ti2i_prior(NoiseSchedule schedule, double data_std,
                                                          std::map<std::string, ImageEdit> edits,
                                                          double neutral_level, std::string model_id) {
        auto table = std::make_shared<const std::map<std::string, ImageEdit>>(std::move(edits));

        MeanFn mean = [table, neutral_level](const Tensor& x_t, const Tensor* image,
                                             const std::optional<std::string>& text) -> Tensor {
            if (!image)
                return Tensor::full(x_t.shape(), neutral_level);
            if (!text)
                return *image;
            auto it = table->find(*text);
            return it == table->end() ? *image : it->second(*image);
        };

        AttentionFn attention = [table](const Tensor& x_src, const std::string& text, const std::string&,
                                        int t) -> AttentionStack {
            if (x_src.ndim() != 3 || x_src.dim(2) != 3)
                throw ShapeError("attention source must be an {H, W, 3} image");
            const std::size_t h = x_src.dim(0), w = x_src.dim(1);
            Tensor footprint({h, w});
            if (auto it = table->find(text); it != table->end()) {
                const Tensor edited = it->second(x_src);
                for (std::size_t y = 0; y < h; ++y)
                    for (std::size_t x = 0; x < w; ++x)
                        for (std::size_t c = 0; c < 3; ++c)
                            footprint.at(y, x) += std::abs(edited.at(y, x, c) - x_src.at(y, x, c));
            }
            AttentionStack stack;
            stack.t = t;
            stack.resolution = 32;
            Tensor low = resize_bilinear(footprint, 32, 32);
            for (auto& v : low.values())
                v = std::max(v, 0.0);
            stack.maps.push_back(low);
            stack.maps.push_back(hadamard(low, low));
            return stack;
        };

        PriorHandle handle{PriorKind::TI2I, std::move(model_id), {true, true, true}};
        return std::make_unique<GaussianToyPrior>(std::move(handle), std::move(schedule), data_std, std::move(mean),
                                                  std::move(attention));
    }

    std::unique_ptr<GaussianToyPrior> make_toy_t2i_prior(NoiseSchedule schedule, double data_std,
                                                         std::map<std::string, Vec3> description_colors,
                                                         double neutral_level, std::string model_id) {
        auto table = std::make_shared<const std::map<std::string, Vec3>>(std::move(description_colors));
        MeanFn mean = [table, neutral_level](const Tensor& x_t, const Tensor*,
                                             const std::optional<std::string>& text) -> Tensor {
            Tensor out = Tensor::full(x_t.shape(), neutral_level);
            if (!text)
                return out;
            auto it = table->find(*text);
            if (it == table->end() || x_t.ndim() != 3 || x_t.dim(2) != 3)
                return out;
            for (std::size_t i = 0; i < out.size(); ++i)
                out[i] = it->second[i % 3];
            return out;
        };
        PriorHandle handle{PriorKind::T2I, std::move(model_id), {false, false, true}};
        return std::make_unique<GaussianToyPrior>(std::move(handle), std::move(schedule), data_std, std::move(mean));
    }

} // namespace latentedit
