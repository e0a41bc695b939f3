// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "latentedit/codec/codec.hpp"

#include <filesystem>
#include <string>

namespace latentedit {

    /// Parses PLY (ascii or binary_little_endian) vertex data. x/y/z are required;
    /// red/green/blue are read as uchar (/255) or float; other scalar vertex
    /// properties become single-column attributes, and properties named
    /// "<attr>_<k>" are gathered into an {N, K} attribute.
    PointCloud parse_ply(std::string_view bytes);
    /// Parses OBJ "v x y z [r g b]" lines; faces and other records are ignored.
    PointCloud parse_obj(std::string_view text);

    /// Dispatches on the file extension (.ply / .obj).
    AssetSource load_asset(const std::filesystem::path& path, std::string class_label = "",
                           std::string instance_id = "");
    /// Dispatches on `format` ("ply" / "obj").
    AssetSource parse_asset(std::string_view bytes, const std::string& format,
                            std::string class_label = "", std::string instance_id = "");

    /// ASCII PLY writer; attributes are written as "<attr>_<k>" float properties.
    std::string write_ply(const PointCloud& cloud);

} // namespace latentedit
