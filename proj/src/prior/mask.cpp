// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "latentedit/prior/mask.hpp"
#include "latentedit/codec/image_io.hpp"
#include "latentedit/core/error.hpp"

#include <algorithm>
#include <cmath>

namespace latentedit {

    void to_json(nlohmann::json& j, const MaskConfig& c) {
        j = nlohmann::json{{"timestep", c.timestep},
                           {"attention_resolution", c.attention_resolution},
                           {"out_resolution", c.out_resolution},
                           {"threshold", c.threshold},
                           {"dilation_px", c.dilation_px},
                           {"blur_sigma_px", c.blur_sigma_px}};
    }

    void from_json(const nlohmann::json& j, MaskConfig& c) {
        c.timestep = j.value("timestep", c.timestep);
        c.attention_resolution = j.value("attention_resolution", c.attention_resolution);
        c.out_resolution = j.value("out_resolution", c.out_resolution);
        c.threshold = j.value("threshold", c.threshold);
        c.dilation_px = j.value("dilation_px", c.dilation_px);
        c.blur_sigma_px = j.value("blur_sigma_px", c.blur_sigma_px);
    }

    Tensor average_attention(const AttentionStack& stack) {
        stack.validate();
        const std::size_t r = stack.resolution;
        Tensor avg({r, r});
        if (stack.maps.empty())
            return avg;
        for (const auto& map : stack.maps) {
            const double peak = max_abs(map);
            if (peak <= 0.0)
                continue;
            for (std::size_t i = 0; i < avg.size(); ++i)
                avg[i] += map[i] / peak;
        }
        avg *= 1.0 / static_cast<double>(stack.maps.size());
        return avg;
    }

    Tensor threshold_map(const Tensor& map, double threshold) {
        Tensor out(map.shape());
        for (std::size_t i = 0; i < map.size(); ++i)
            out[i] = map[i] >= threshold ? 1.0 : 0.0;
        return out;
    }

    Tensor dilate_square(const Tensor& map, int radius) {
        if (map.ndim() != 2)
            throw ShapeError("dilate_square expects {H, W}");
        if (radius <= 0)
            return map;
        const auto h = static_cast<long>(map.dim(0)), w = static_cast<long>(map.dim(1));
        // Separable: a square max filter is a row max followed by a column max.
        Tensor rows(map.shape());
        for (long y = 0; y < h; ++y) {
            for (long x = 0; x < w; ++x) {
                double m = -std::numeric_limits<double>::infinity();
                for (long dx = std::max(0L, x - radius); dx <= std::min(w - 1, x + radius); ++dx)
                    m = std::max(m, map.at(y, dx));
                rows.at(y, x) = m;
            }
        }
        Tensor out(map.shape());
        for (long y = 0; y < h; ++y) {
            for (long x = 0; x < w; ++x) {
                double m = -std::numeric_limits<double>::infinity();
                for (long dy = std::max(0L, y - radius); dy <= std::min(h - 1, y + radius); ++dy)
                    m = std::max(m, rows.at(dy, x));
                out.at(y, x) = m;
            }
        }
        return out;
    }

    Tensor gaussian_blur(const Tensor& map, double sigma, double truncate) {
        if (map.ndim() != 2)
            throw ShapeError("gaussian_blur expects {H, W}");
        if (!(sigma > 0.0))
            return map;
        const int radius = static_cast<int>(std::ceil(truncate * sigma));
        std::vector<double> kernel(2 * radius + 1);
        double norm = 0.0;
        for (int k = -radius; k <= radius; ++k) {
            kernel[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
            norm += kernel[k + radius];
        }
        for (auto& v : kernel)
            v /= norm;

        const auto h = static_cast<long>(map.dim(0)), w = static_cast<long>(map.dim(1));
        const auto clampi = [](long v, long hi) { return std::clamp(v, 0L, hi - 1); };
        Tensor tmp(map.shape()), out(map.shape());
        for (long y = 0; y < h; ++y)
            for (long x = 0; x < w; ++x) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k)
                    acc += kernel[k + radius] * map.at(y, clampi(x + k, w));
                tmp.at(y, x) = acc;
            }
        for (long y = 0; y < h; ++y)
            for (long x = 0; x < w; ++x) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k)
                    acc += kernel[k + radius] * tmp.at(clampi(y + k, h), x);
                out.at(y, x) = std::clamp(acc, 0.0, 1.0);
            }
        return out;
    }

    EditMask process_attention(const AttentionStack& stack, const MaskConfig& config) {
        if (stack.resolution != config.attention_resolution)
            throw InputError("attention resolution " + std::to_string(stack.resolution) + " != configured " +
                             std::to_string(config.attention_resolution));
        const Tensor avg = average_attention(stack);
        const Tensor up = resize_bilinear(avg, config.out_resolution, config.out_resolution);
        const Tensor hard = threshold_map(up, config.threshold);
        const Tensor grown = dilate_square(hard, config.dilation_px);
        return {gaussian_blur(grown, config.blur_sigma_px)};
    }

    EditMask extract_edit_mask(const DiffusionPrior& prior, const Tensor& x_src, const std::string& y,
                               const std::string& token, const MaskConfig& config) {
        return process_attention(prior.attention_maps(x_src, y, token, config.timestep), config);
    }

} // namespace latentedit
