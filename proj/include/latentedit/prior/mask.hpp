// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "latentedit/prior/prior.hpp"

#include <json.hpp>

namespace latentedit {

    struct MaskConfig {
        /// Prior step at which attention is read.
        int timestep = 600;
        std::size_t attention_resolution = 32;
        std::size_t out_resolution = 128;
        /// Cells >= threshold are kept.
        double threshold = 0.5;
        /// Half-width of the square (L-infinity) dilation element, in pixels.
        int dilation_px = 10;
        /// Gaussian blur sigma in pixels; the kernel is truncated at 3 sigma.
        double blur_sigma_px = 5.0;

        bool operator==(const MaskConfig&) const = default;
    };

    void to_json(nlohmann::json& j, const MaskConfig& c);
    void from_json(const nlohmann::json& j, MaskConfig& c);

    /// Normalizes every map by its own maximum (all-zero maps stay zero), then averages.
    Tensor average_attention(const AttentionStack& stack);
    Tensor threshold_map(const Tensor& map, double threshold);
    /// Max filter with a (2r+1)^2 square element; out-of-frame pixels are ignored.
    Tensor dilate_square(const Tensor& map, int radius);
    /// Separable Gaussian blur with edge replication.
    Tensor gaussian_blur(const Tensor& map, double sigma, double truncate = 3.0);

    /// average -> bilinear upsample -> threshold -> dilate -> blur.
    EditMask process_attention(const AttentionStack& stack, const MaskConfig& config);

    /// Reads attention for `token` from the prior at config.timestep and turns it into a mask.
    EditMask extract_edit_mask(const DiffusionPrior& prior, const Tensor& x_src, const std::string& y,
                               const std::string& token, const MaskConfig& config = {});

} // namespace latentedit
