// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "latentedit/codec/camera.hpp"
#include "latentedit/core/types.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace latentedit {

    /// Colored point cloud: `xyz_rgb` is {N, 6} with rgb in [0, 1]. Extra
    /// per-point attributes ({N, k} each) are carried through from PLY files.
    struct PointCloud {
        Tensor xyz_rgb;
        std::map<std::string, Tensor> attributes;

        std::size_t size() const { return xyz_rgb.ndim() == 2 ? xyz_rgb.dim(0) : 0; }
    };

    /// A source 3D object as handed to an encoder.
    struct AssetSource {
        std::optional<PointCloud> points;
        /// Multi-view RGB renders, {H, W, 3} each.
        std::vector<Tensor> views;
        std::string class_label;
        std::string instance_id;

        /// Throws InputError on an empty or malformed point cloud / view set.
        void validate() const;
    };

    struct RenderedView {
        Tensor rgb;   ///< {H, W, 3}, entries in [0, 1]
        Tensor depth; ///< {H, W}, world units; background holds the far-plane value
        Viewpoint viewpoint;

        int height() const { return static_cast<int>(rgb.dim(0)); }
        int width() const { return static_cast<int>(rgb.dim(1)); }
    };

    /// Backend-specific decoded field. Only the codec that produced it can render it.
    class FieldData {
    public:
        virtual ~FieldData() = default;
    };

    struct FieldModel {
        std::string decoder_id;
        std::shared_ptr<const FieldData> impl;
    };

    /// Encoder h, decoder h* and differentiable renderer R behind one interface.
    class Codec {
    public:
        virtual ~Codec() = default;

        virtual std::string id() const = 0;
        virtual LatentShape latent_shape() const = 0;

        virtual Latent encode(const AssetSource& asset) const = 0;
        virtual FieldModel decode(const Latent& latent) const = 0;
        virtual RenderedView render(const FieldModel& field, const Viewpoint& vp,
                                    int resolution) const = 0;

        /// Vector-Jacobian product of render(decode(latent)) with respect to the
        /// latent entries, given upstream gradients on rgb {H, W, 3} and depth {H, W}.
        virtual Tensor render_backward(const Latent& latent, const Viewpoint& vp, int resolution,
                                       const Tensor& grad_rgb, const Tensor& grad_depth) const = 0;

        /// Far-plane value written into background depth pixels.
        virtual double far_plane() const = 0;

        /// Whether encode may be called from several threads at once.
        virtual bool concurrent_safe() const { return false; }

        RenderedView render_latent(const Latent& latent, const Viewpoint& vp, int resolution) const {
            return render(decode(latent), vp, resolution);
        }
    };

} // namespace latentedit
