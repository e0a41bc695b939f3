// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "latentedit/core/tensor.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace latentedit {

    /// 8-bit RGB PNG from an {H, W, 3} image in [0, 1] (values are clamped).
    std::string encode_png_rgb(const Tensor& rgb);
    /// 8-bit grayscale PNG from an {H, W} map in [0, 1] (masks).
    std::string encode_png_gray(const Tensor& gray);
    /// 16-bit grayscale PNG; depth is mapped linearly from [0, far] to [0, 65535].
    std::string encode_png_depth16(const Tensor& depth, double far_plane);

    void write_png_rgb(const std::filesystem::path& path, const Tensor& rgb);
    void write_png_gray(const std::filesystem::path& path, const Tensor& gray);
    void write_png_depth16(const std::filesystem::path& path, const Tensor& depth, double far_plane);

    /// Decodes an 8-bit or 16-bit PNG (gray, gray+alpha, RGB or RGBA) into {H, W, 3} in [0, 1].
    Tensor decode_png_rgb(std::string_view bytes);
    Tensor read_png_rgb(const std::filesystem::path& path);
    /// Inverse of encode_png_depth16.
    Tensor decode_png_depth16(std::string_view bytes, double far_plane);

    /// Bilinear resize of an {H, W} or {H, W, C} image (half-pixel centres, edge clamp).
    Tensor resize_bilinear(const Tensor& image, std::size_t out_h, std::size_t out_w);

    /// Places equally-sized {H, W, 3} frames side by side.
    Tensor hstack_frames(const std::vector<Tensor>& frames);

} // namespace latentedit
