// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "latentedit/codec/codec.hpp"
#include "latentedit/editor/editor.hpp"
#include "latentedit/eval/metrics.hpp"
#include "latentedit/trainer/dataset.hpp"

#include <filesystem>
#include <optional>

namespace latentedit {

    struct EvalPair {
        Latent latent;
        std::string class_label;
        AssetOrigin origin = AssetOrigin::Generated;
        EditInstruction instruction;
        std::string source_text;
        std::string target_text;

        void validate() const;
    };

    struct EvalConfig {
        int views = 20;
        /// Side of the square images handed to the metrics.
        int metric_resolution = 256;
        /// Renderer resolution before the resize.
        int render_resolution = 128;
        CameraConfig camera;
        std::uint64_t seed = 0;
    };

    void to_json(nlohmann::json& j, const EvalConfig& c);
    void from_json(const nlohmann::json& j, EvalConfig& c);

    struct PairMetrics {
        std::string class_label;
        std::string instruction;
        EditKind kind = EditKind::Global;
        double clip_sim = 0.0;
        double clip_dir = 0.0;
        /// Global edits only.
        std::optional<double> structure_distance;
    };

    struct EvalReport {
        std::vector<PairMetrics> pairs;
        double clip_sim = 0.0;
        double clip_dir = 0.0;
        /// Mean over global pairs; unset when there are none.
        std::optional<double> structure_distance;
        int views = 0;
        int resolution = 0;
        std::string editor_checksum;
        std::string codec_id;
        std::string embedder_id;
        std::string backbone_id;
        std::string config_hash;

        nlohmann::json to_json() const;
        std::string to_csv() const;
    };

    /// Edits each pair once (seed cfg.seed), renders source and edit from cfg.views
    /// uniform azimuths, resizes to the metric resolution and scores them.
    EvalReport evaluate(const Editor& editor, const std::vector<EvalPair>& eval_set, const Codec& codec,
                        const ImageTextEmbedder& embedder, const StructureBackbone& backbone,
                        const EvalConfig& cfg = {});

    /// Writes report.json, report.csv and one bar chart PNG per metric into `dir`.
    void write_report(const std::filesystem::path& dir, const EvalReport& report);

    /// Bar chart of `values` (one bar per value, range [lo, hi]) as an {H, W, 3} image.
    Tensor bar_chart(const std::vector<double>& values, double lo, double hi, int height = 200, int bar_width = 24);

    /*
     * Eval-set file: a JSON array of
     *   {"latent": <path>, "class_label", "origin", "instruction": {...}, "source_text", "target_text"}
     * with latent paths relative to the file.
     */
    std::vector<EvalPair> load_eval_set(const std::filesystem::path& path);

} // namespace latentedit
