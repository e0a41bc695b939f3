// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "latentedit/core/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <string>

namespace latentedit {

    using TensorMap = std::map<std::string, Tensor>;

    enum class DType : std::uint8_t {
        F64 = 0,
        F32 = 1
    };

    std::string to_string(DType dtype);

    /*
     * Binary tensor container, little-endian:
     *
     *   magic "LETC" | u32 version (1) | u32 entry count
     *   per entry: u32 name length | name bytes | u8 dtype | u32 ndim | u64 dims[ndim] | payload
     *
     * Entries are written in name order. F32 payloads are widened to double on read.
     */
    std::string serialize_tensors(const TensorMap& tensors, DType dtype = DType::F64);
    TensorMap deserialize_tensors(std::string_view bytes);

    void write_tensor_container(const std::filesystem::path& path, const TensorMap& tensors,
                                DType dtype = DType::F64);
    TensorMap read_tensor_container(const std::filesystem::path& path);

    /// Sidecar path holding the JSON metadata of a container: "<path>.json".
    std::filesystem::path sidecar_path(const std::filesystem::path& path);

    /// Writes the latent as a single-entry container plus {codec_id, shape, dtype} sidecar.
    void save_latent(const std::filesystem::path& path, const Latent& latent,
                     DType dtype = DType::F64);
    Latent load_latent(const std::filesystem::path& path);

    void write_json(const std::filesystem::path& path, const nlohmann::json& j);
    nlohmann::json read_json(const std::filesystem::path& path);

} // namespace latentedit
