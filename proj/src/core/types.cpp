// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "latentedit/core/types.hpp"
#include "latentedit/core/error.hpp"

#include <cmath>

namespace latentedit {

    namespace {
        void require_nonneg_finite(double v, const char* name, const char* owner) {
            if (!std::isfinite(v) || v < 0.0)
                throw ConfigError(std::string(owner) + "." + name + " must be finite and >= 0");
        }
    } // namespace

    LatentShape Latent::shape() const {
        if (data.ndim() != 2)
            return {};
        return {data.dim(0), data.dim(1)};
    }

    void Latent::validate(const LatentShape& expected) const {
        if (data.ndim() != 2 || shape() != expected) {
            throw ShapeError("latent shape " + data.shape_str() + " does not match codec shape " +
                             shape_to_string(expected.as_shape()));
        }
        if (!all_finite(data))
            throw InputError("latent contains non-finite entries");
    }

    std::string to_string(EditKind kind) {
        return kind == EditKind::Global ? "global" : "local";
    }

    EditKind parse_edit_kind(const std::string& text) {
        if (text == "global")
            return EditKind::Global;
        if (text == "local")
            return EditKind::Local;
        throw InstructionError("unknown edit kind '" + text + "'");
    }

    EditInstruction EditInstruction::global(std::string text) {
        return {std::move(text), EditKind::Global, std::nullopt, std::nullopt};
    }

    EditInstruction EditInstruction::local(std::string text, std::string target_description,
                                           std::string attention_token) {
        return {std::move(text), EditKind::Local, std::move(target_description),
                std::move(attention_token)};
    }

    void EditInstruction::validate() const {
        if (text.empty())
            throw InstructionError("instruction text is empty");
        if (kind == EditKind::Local) {
            if (!target_description || target_description->empty())
                throw InstructionError("local instruction '" + text + "' has no target description");
            if (!attention_token || attention_token->empty())
                throw InstructionError("local instruction '" + text + "' has no attention token");
        }
    }

    void GuidanceConfig::validate() const {
        require_nonneg_finite(gamma_image, "gamma_image", "guidance");
        require_nonneg_finite(gamma_text, "gamma_text", "guidance");
        require_nonneg_finite(gamma_text_t2i, "gamma_text_t2i", "guidance");
    }

    void LossWeights::validate() const {
        require_nonneg_finite(lambda_ti2i, "lambda_ti2i", "loss");
        require_nonneg_finite(lambda_t2i, "lambda_t2i", "loss");
        require_nonneg_finite(lambda_photo, "lambda_photo", "loss");
        require_nonneg_finite(lambda_depth, "lambda_depth", "loss");
        require_nonneg_finite(lambda_reg_global, "lambda_reg_global", "loss");
    }

    void CameraConfig::validate() const {
        if (!(radius > 0.0) || !std::isfinite(radius))
            throw ConfigError("camera.radius must be > 0");
        if (!std::isfinite(elevation_deg))
            throw ConfigError("camera.elevation_deg must be finite");
        if (!(azimuth_range_deg.first <= azimuth_range_deg.second))
            throw ConfigError("camera.azimuth_range_deg must satisfy lo <= hi");
        if (render_resolution <= 0)
            throw ConfigError("camera.render_resolution must be positive");
    }

} // namespace latentedit
