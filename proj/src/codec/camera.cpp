// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "latentedit/codec/camera.hpp"
#include "latentedit/core/error.hpp"

#include <cmath>
#include <numbers>

namespace latentedit {

    namespace {
        // Returns k when deg is an exact multiple of 90 (k in 0..3), else -1.
        int quadrant(double deg) {
            const double r = std::fmod(deg, 360.0);
            const double norm = r < 0.0 ? r + 360.0 : r;
            if (std::fmod(norm, 90.0) != 0.0)
                return -1;
            return static_cast<int>(norm / 90.0) % 4;
        }
    } // namespace

    double sin_deg(double deg) {
        switch (quadrant(deg)) {
        case 0: return 0.0;
        case 1: return 1.0;
        case 2: return 0.0;
        case 3: return -1.0;
        default: return std::sin(deg * std::numbers::pi / 180.0);
        }
    }

    double cos_deg(double deg) {
        switch (quadrant(deg)) {
        case 0: return 1.0;
        case 1: return 0.0;
        case 2: return -1.0;
        case 3: return 0.0;
        default: return std::cos(deg * std::numbers::pi / 180.0);
        }
    }

    CameraFrame camera_frame(const Viewpoint& vp) {
        const double se = sin_deg(vp.elevation_deg), ce = cos_deg(vp.elevation_deg);
        const double sa = sin_deg(vp.azimuth_deg), ca = cos_deg(vp.azimuth_deg);
        CameraFrame f;
        f.toward = {ce * sa, se, ce * ca};
        f.right = {ca, 0.0, -sa};
        f.up = {-se * sa, ce, -se * ca};
        f.position = {vp.radius * f.toward[0], vp.radius * f.toward[1], vp.radius * f.toward[2]};
        return f;
    }

    Viewpoint sample_viewpoint(Rng& rng, const CameraConfig& cam) {
        const auto [lo, hi] = cam.azimuth_range_deg;
        double azimuth = lo;
        if (hi > lo)
            azimuth = std::uniform_real_distribution<double>(lo, hi)(rng);
        return {azimuth, cam.elevation_deg, cam.radius};
    }

    std::vector<Viewpoint> uniform_viewpoints(const CameraConfig& cam, int count) {
        if (count <= 0)
            throw InputError("viewpoint count must be positive");
        const auto [lo, hi] = cam.azimuth_range_deg;
        std::vector<Viewpoint> views;
        views.reserve(count);
        for (int k = 0; k < count; ++k)
            views.push_back({lo + (hi - lo) * k / count, cam.elevation_deg, cam.radius});
        return views;
    }

} // namespace latentedit
