// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "latentedit/core/tensor.hpp"

#include <optional>
#include <string>
#include <utility>

namespace latentedit {

    /// Declared latent shape of a codec: D rows x C columns.
    struct LatentShape {
        std::size_t rows = 0;
        std::size_t cols = 0;

        Shape as_shape() const { return {rows, cols}; }
        std::size_t numel() const { return rows * cols; }
        bool operator==(const LatentShape&) const = default;
    };

    /// 3D asset code produced by a codec's encoder and consumed by its decoder.
    struct Latent {
        Tensor data;
        std::string codec_id;

        LatentShape shape() const;

        /// Throws ShapeError on a shape mismatch and InputError on non-finite entries.
        void validate(const LatentShape& expected) const;
    };

    enum class EditKind {
        Global,
        Local
    };

    std::string to_string(EditKind kind);
    EditKind parse_edit_kind(const std::string& text);

    struct EditInstruction {
        std::string text;
        EditKind kind = EditKind::Global;
        /// Full description of the edited object; required for local edits.
        std::optional<std::string> target_description;
        /// Word whose cross-attention map localizes a local edit.
        std::optional<std::string> attention_token;

        static EditInstruction global(std::string text);
        static EditInstruction local(std::string text, std::string target_description,
                                     std::string attention_token);

        /// Throws InstructionError when text is empty or a local edit lacks its
        /// target description or attention token.
        void validate() const;

        bool operator==(const EditInstruction&) const = default;
    };

    /// Classifier-free guidance scales.
    struct GuidanceConfig {
        double gamma_image = 2.5;
        double gamma_text = 50.0;
        double gamma_text_t2i = 50.0;

        /// (gamma_image, gamma_text) = (2.5, 50) used for global edits.
        static GuidanceConfig global_defaults() { return {2.5, 50.0, 50.0}; }
        /// (gamma_image, gamma_text, gamma_text_t2i) = (2.5, 7.5, 50) used for local edits.
        static GuidanceConfig local_defaults() { return {2.5, 7.5, 50.0}; }

        void validate() const;
        bool operator==(const GuidanceConfig&) const = default;
    };

    struct LossWeights {
        double lambda_ti2i = 1.0;
        double lambda_t2i = 1.0;
        double lambda_photo = 1.25;
        double lambda_depth = 0.8;
        double lambda_reg_global = 5.0;

        void validate() const;
        bool operator==(const LossWeights&) const = default;
    };

    /// Circular camera track used for both training and evaluation renders.
    struct CameraConfig {
        double radius = 4.0;
        double elevation_deg = 30.0;
        std::pair<double, double> azimuth_range_deg{-180.0, 180.0};
        int render_resolution = 128;

        void validate() const;
        bool operator==(const CameraConfig&) const = default;
    };

} // namespace latentedit
