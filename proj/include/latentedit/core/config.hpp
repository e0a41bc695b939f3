// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "latentedit/core/schedule.hpp"
#include "latentedit/core/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace latentedit {

    /// Environment variable that overrides the config path given on the command line.
    inline constexpr const char* kConfigEnvVar = "LATENTEDIT_CONFIG";

    /// How the noise schedule is built. `kind` is one of "shap-e-cosine", "cosine",
    /// "linear" or "table"; "table" reads {"alphas": [...], "sigmas": [...]} from `table_path`.
    struct ScheduleSpec {
        std::string kind = "shap-e-cosine";
        int steps = 1024;
        double offset = 0.008;
        std::string table_path;

        NoiseSchedule build() const;
        bool operator==(const ScheduleSpec&) const = default;
    };

    /// Top-level configuration document. Sections owned by other modules
    /// (train, codec, eval, ...) are kept as raw JSON in `extra` and parsed there.
    struct AppConfig {
        ScheduleSpec schedule;
        GuidanceConfig guidance;
        LossWeights loss;
        CameraConfig camera;
        nlohmann::json extra = nlohmann::json::object();

        void validate() const;
        bool operator==(const AppConfig&) const = default;
    };

    void to_json(nlohmann::json& j, const ScheduleSpec& s);
    void from_json(const nlohmann::json& j, ScheduleSpec& s);
    void to_json(nlohmann::json& j, const GuidanceConfig& g);
    void from_json(const nlohmann::json& j, GuidanceConfig& g);
    void to_json(nlohmann::json& j, const LossWeights& w);
    void from_json(const nlohmann::json& j, LossWeights& w);
    void to_json(nlohmann::json& j, const CameraConfig& c);
    void from_json(const nlohmann::json& j, CameraConfig& c);
    void to_json(nlohmann::json& j, const EditInstruction& y);
    void from_json(const nlohmann::json& j, EditInstruction& y);
    void to_json(nlohmann::json& j, const AppConfig& c);
    void from_json(const nlohmann::json& j, AppConfig& c);

    AppConfig load_config(const std::filesystem::path& path);
    void save_config(const AppConfig& config, const std::filesystem::path& path);

    /// Picks the config path: $LATENTEDIT_CONFIG if set, else `cli_path`.
    std::optional<std::filesystem::path> resolve_config_path(
        const std::optional<std::filesystem::path>& cli_path);

    /// Loads the resolved config, or returns defaults when no path resolves.
    AppConfig load_config_or_default(const std::optional<std::filesystem::path>& cli_path);

    /// FNV-1a of the canonical JSON dump; used to tag checkpoints and reports.
    std::string config_hash(const nlohmann::json& j);

} // namespace latentedit
