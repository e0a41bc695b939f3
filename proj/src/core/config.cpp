// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "latentedit/core/config.hpp"
#include "latentedit/core/error.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace latentedit {

    using nlohmann::json;

    namespace {
        template <typename T>
        void read_opt(const json& j, const char* key, T& out) {
            if (auto it = j.find(key); it != j.end())
                out = it->get<T>();
        }
    } // namespace

    NoiseSchedule ScheduleSpec::build() const {
        if (kind == "shap-e-cosine")
            return NoiseSchedule::shap_e_compatible();
        if (kind == "cosine")
            return NoiseSchedule::cosine(steps, offset);
        if (kind == "linear")
            return NoiseSchedule::linear_sigma(steps);
        if (kind == "table") {
            std::ifstream in(table_path);
            if (!in)
                throw ConfigError("cannot open schedule table '" + table_path + "'");
            const json j = json::parse(in);
            return NoiseSchedule(j.at("alphas").get<std::vector<double>>(),
                                 j.at("sigmas").get<std::vector<double>>());
        }
        throw ConfigError("unknown schedule kind '" + kind + "'");
    }

    void to_json(json& j, const ScheduleSpec& s) {
        j = json{{"kind", s.kind}, {"steps", s.steps}, {"offset", s.offset}, {"table_path", s.table_path}};
    }

    void from_json(const json& j, ScheduleSpec& s) {
        read_opt(j, "kind", s.kind);
        read_opt(j, "steps", s.steps);
        read_opt(j, "offset", s.offset);
        read_opt(j, "table_path", s.table_path);
    }

    void to_json(json& j, const GuidanceConfig& g) {
        j = json{{"gamma_image", g.gamma_image},
                 {"gamma_text", g.gamma_text},
                 {"gamma_text_t2i", g.gamma_text_t2i}};
    }

    void from_json(const json& j, GuidanceConfig& g) {
        read_opt(j, "gamma_image", g.gamma_image);
        read_opt(j, "gamma_text", g.gamma_text);
        read_opt(j, "gamma_text_t2i", g.gamma_text_t2i);
    }

    void to_json(json& j, const LossWeights& w) {
        j = json{{"lambda_ti2i", w.lambda_ti2i},
                 {"lambda_t2i", w.lambda_t2i},
                 {"lambda_photo", w.lambda_photo},
                 {"lambda_depth", w.lambda_depth},
                 {"lambda_reg_global", w.lambda_reg_global}};
    }

    void from_json(const json& j, LossWeights& w) {
        read_opt(j, "lambda_ti2i", w.lambda_ti2i);
        read_opt(j, "lambda_t2i", w.lambda_t2i);
        read_opt(j, "lambda_photo", w.lambda_photo);
        read_opt(j, "lambda_depth", w.lambda_depth);
        read_opt(j, "lambda_reg_global", w.lambda_reg_global);
    }

    void to_json(json& j, const CameraConfig& c) {
        j = json{{"radius", c.radius},
                 {"elevation_deg", c.elevation_deg},
                 {"azimuth_range_deg", {c.azimuth_range_deg.first, c.azimuth_range_deg.second}},
                 {"render_resolution", c.render_resolution}};
    }

    void from_json(const json& j, CameraConfig& c) {
        read_opt(j, "radius", c.radius);
        read_opt(j, "elevation_deg", c.elevation_deg);
        if (auto it = j.find("azimuth_range_deg"); it != j.end()) {
            const auto range = it->get<std::vector<double>>();
            if (range.size() != 2)
                throw ConfigError("camera.azimuth_range_deg must have two entries");
            c.azimuth_range_deg = {range[0], range[1]};
        }
        read_opt(j, "render_resolution", c.render_resolution);
    }

    void to_json(json& j, const AppConfig& c) {
        j = c.extra.is_object() ? c.extra : json::object();
        j["schedule"] = c.schedule;
        j["guidance"] = c.guidance;
        j["loss"] = c.loss;
        j["camera"] = c.camera;
    }

    void from_json(const json& j, AppConfig& c) {
        if (!j.is_object())
            throw ConfigError("config root must be an object");
        c = AppConfig{};
        read_opt(j, "schedule", c.schedule);
        read_opt(j, "guidance", c.guidance);
        read_opt(j, "loss", c.loss);
        read_opt(j, "camera", c.camera);
        c.extra = json::object();
        for (const auto& [key, value] : j.items()) {
            if (key != "schedule" && key != "guidance" && key != "loss" && key != "camera")
                c.extra[key] = value;
        }
    }

    void AppConfig::validate() const {
        guidance.validate();
        loss.validate();
        camera.validate();
    }

    AppConfig load_config(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot open config '" + path.string() + "'");
        AppConfig config;
        try {
            config = json::parse(in).get<AppConfig>();
        } catch (const json::exception& e) {
            throw ConfigError("config '" + path.string() + "': " + e.what());
        }
        config.validate();
        return config;
    }

    void save_config(const AppConfig& config, const std::filesystem::path& path) {
        std::ofstream out(path);
        if (!out)
            throw ConfigError("cannot write config '" + path.string() + "'");
        out << std::setw(2) << json(config) << '\n';
    }

    std::optional<std::filesystem::path> resolve_config_path(
        const std::optional<std::filesystem::path>& cli_path) {
        if (const char* env = std::getenv(kConfigEnvVar); env && *env)
            return std::filesystem::path(env);
        return cli_path;
    }

    AppConfig load_config_or_default(const std::optional<std::filesystem::path>& cli_path) {
        if (auto path = resolve_config_path(cli_path))
            return load_config(*path);
        return AppConfig{};
    }

    void to_json(json& j, const EditInstruction& y) {
        j = json{{"text", y.text}, {"kind", to_string(y.kind)}};
        if (y.target_description)
            j["target_description"] = *y.target_description;
        if (y.attention_token)
            j["attention_token"] = *y.attention_token;
    }

    void from_json(const json& j, EditInstruction& y) {
        y.text = j.at("text").get<std::string>();
        y.kind = parse_edit_kind(j.value("kind", "global"));
        y.target_description.reset();
        y.attention_token.reset();
        if (j.contains("target_description"))
            y.target_description = j["target_description"].get<std::string>();
        if (j.contains("attention_token"))
            y.attention_token = j["attention_token"].get<std::string>();
        y.validate();
    }

    std::string config_hash(const json& j) {
        const std::string text = j.dump();
        std::uint64_t h = 1469598103934665603ull;
        for (unsigned char ch : text) {
            h ^= ch;
            h *= 1099511628211ull;
        }
        std::ostringstream os;
        os << std::hex << std::setw(16) << std::setfill('0') << h;
        return os.str();
    }

} // namespace latentedit
