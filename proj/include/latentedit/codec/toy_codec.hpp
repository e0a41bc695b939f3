// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "latentedit/codec/codec.hpp"

#include <json.hpp>

namespace latentedit {

    /*
     * Analytic blob codec for desk-scale testing.
     *
     * The latent is {n^3, 4}: one row per cell of an n x n x n lattice centred at
     * the origin, columns (density code a, colour codes for r, g, b). Cell k decodes
     * to an isotropic Gaussian blob with density (a + a0)^2 * exp(-|p - c_k|^2 / (2 s^2))
     * and colour exp(code + l0). The offsets a0, l0 centre typical latents on zero.
     *
     * Rendering is orthographic. A Gaussian's line integral along a ray is closed
     * form, tau_k = a^2 * sqrt(2 pi) s * exp(-d_k^2 / (2 s^2)) with d_k the
     * distance from the ray to c_k, and blobs are composited order-independently:
     *
     *   T = sum tau_k,  g(T) = (1 - e^-T) / T
     *   rgb   = clamp(g(T) * sum tau_k col_k + e^-T * background, 0, 1)
     *   depth = g(T) * sum tau_k z_k + e^-T * far
     *
     * where z_k is the camera distance of c_k. A density code of -a0 makes a cell empty.
     */
    struct ToyCodecConfig {
        int lattice = 3;
        double spacing = 0.8;
        double blob_sigma = 0.2;
        Vec3 background{0.0, 0.0, 0.0};
        double far_plane = 8.0;
        /// Half-width of the orthographic view window in world units.
        double view_half_extent = 2.0;
        double density_offset = 1.1;
        double log_color_offset = -0.9;

        bool operator==(const ToyCodecConfig&) const = default;
    };

    void to_json(nlohmann::json& j, const ToyCodecConfig& c);
    void from_json(const nlohmann::json& j, ToyCodecConfig& c);

    class ToyCodec final : public Codec {
    public:
        static constexpr std::size_t kChannels = 4;

        explicit ToyCodec(ToyCodecConfig config = {});

        std::string id() const override;
        LatentShape latent_shape() const override;
        const ToyCodecConfig& config() const { return config_; }

        /// Copies the exact latent rows when the cloud carries a per-point "code"
        /// attribute (as produced by to_asset); otherwise bins points into lattice
        /// cells and estimates density from point counts and colour from mean rgb.
        Latent encode(const AssetSource& asset) const override;
        FieldModel decode(const Latent& latent) const override;
        RenderedView render(const FieldModel& field, const Viewpoint& vp, int resolution) const override;
        Tensor render_backward(const Latent& latent, const Viewpoint& vp, int resolution,
                               const Tensor& grad_rgb, const Tensor& grad_depth) const override;
        double far_plane() const override { return config_.far_plane; }
        bool concurrent_safe() const override { return true; }

        /// Point-cloud asset whose encode() returns `latent` exactly.
        AssetSource to_asset(const Latent& latent, std::string class_label = "toy",
                             std::string instance_id = "") const;

        Vec3 cell_center(std::size_t cell) const;

        /// Random latent with every cell visible: density codes in [-0.3, 0.3],
        /// colour codes in [-0.5, 0.5].
        Latent random_latent(Rng& rng) const;

    private:
        ToyCodecConfig config_;
    };

} // namespace latentedit
