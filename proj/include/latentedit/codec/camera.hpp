// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "latentedit/core/tensor.hpp"
#include "latentedit/core/types.hpp"

#include <array>
#include <vector>

namespace latentedit {

    struct Viewpoint {
        double azimuth_deg = 0.0;
        double elevation_deg = 30.0;
        double radius = 4.0;

        bool operator==(const Viewpoint&) const = default;
    };

    using Vec3 = std::array<double, 3>;

    inline double dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

    /// Orthonormal camera basis. `toward` points from the origin to the camera;
    /// right x up = toward.
    struct CameraFrame {
        Vec3 right;
        Vec3 up;
        Vec3 toward;
        Vec3 position;
    };

    /// sin/cos of an angle in degrees, exact at multiples of 90.
    double sin_deg(double deg);
    double cos_deg(double deg);

    CameraFrame camera_frame(const Viewpoint& vp);

    /// Azimuth uniform in the configured range; elevation and radius fixed.
    Viewpoint sample_viewpoint(Rng& rng, const CameraConfig& cam);

    /// `count` azimuths equally spaced over the configured range (the upper end
    /// is excluded so a full circle has no duplicate view).
    std::vector<Viewpoint> uniform_viewpoints(const CameraConfig& cam, int count);

} // namespace latentedit
