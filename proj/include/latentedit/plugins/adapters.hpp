// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "latentedit/codec/codec.hpp"
#include "latentedit/core/tensor_io.hpp"
#include "latentedit/prior/prior.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <optional>

namespace latentedit {

    /// Environment variable naming the directory that holds external model weights.
    inline constexpr const char* kWeightsRootEnv = "LATENTEDIT_WEIGHTS_ROOT";

    /// `override` if given, else $LATENTEDIT_WEIGHTS_ROOT, else "./weights".
    std::filesystem::path weights_root(const std::optional<std::filesystem::path>& override = std::nullopt);

    /*
     * Process-boundary adapter. <weights_root>/<model_id>/adapter.json describes it:
     *
     *   {"command": ["python3", "serve_prior.py"], "kind": "ti2i" | "t2i" | "codec", ...}
     *
     * Each call runs `command... <op> <request_dir>` with the working directory set to the
     * model directory. The request directory holds request.json and request.letc; the
     * adapter writes response.letc (and optionally response.json) and exits 0.
     */
    class ProcessAdapter {
    public:
        ProcessAdapter(std::string model_id, const std::filesystem::path& root);

        const std::string& model_id() const { return model_id_; }
        const std::filesystem::path& model_dir() const { return dir_; }
        const nlohmann::json& manifest() const { return manifest_; }

        struct Response {
            TensorMap tensors;
            nlohmann::json meta;
        };

        /// Throws BackendError when the process fails or produces no response.
        Response call(const std::string& op, const nlohmann::json& request, const TensorMap& tensors) const;

    private:
        std::string model_id_;
        std::filesystem::path dir_;
        nlohmann::json manifest_;
        std::vector<std::string> command_;
    };

    /// Diffusion prior served by an external process. Manifest keys: kind ("ti2i" | "t2i"),
    /// schedule (a schedule spec, typically {"kind": "table", ...}), capabilities.
    class ExternalPrior final : public DiffusionPrior {
    public:
        ExternalPrior(std::string model_id, const std::filesystem::path& root);

        const PriorHandle& handle() const override { return handle_; }
        const NoiseSchedule& schedule() const override { return schedule_; }

    protected:
        Tensor do_predict(const Tensor& x_t, const Tensor* image_cond, const std::optional<std::string>& text,
                          int t) const override;
        AttentionStack do_attention(const Tensor& x_src, const std::string& text, const std::string& token,
                                    int t) const override;

    private:
        ProcessAdapter adapter_;
        PriorHandle handle_;
        NoiseSchedule schedule_;
    };

    /// Codec served by an external process. Manifest keys: latent_shape [D, C], far_plane, concurrent.
    class ExternalCodec final : public Codec {
    public:
        ExternalCodec(std::string model_id, const std::filesystem::path& root);

        std::string id() const override { return adapter_.model_id(); }
        LatentShape latent_shape() const override { return shape_; }
        Latent encode(const AssetSource& asset) const override;
        FieldModel decode(const Latent& latent) const override;
        RenderedView render(const FieldModel& field, const Viewpoint& vp, int resolution) const override;
        Tensor render_backward(const Latent& latent, const Viewpoint& vp, int resolution, const Tensor& grad_rgb,
                               const Tensor& grad_depth) const override;
        double far_plane() const override { return far_; }
        bool concurrent_safe() const override { return concurrent_; }

    private:
        ProcessAdapter adapter_;
        LatentShape shape_;
        double far_ = 8.0;
        bool concurrent_ = false;
    };

    /*
     * Builds a prior from a JSON spec:
     *   {"adapter": "toy-ti2i", "data_std", "neutral_level", "edits": {"<instruction>": {"tint": [r, g, b]}}}
     *   {"adapter": "toy-t2i", "data_std", "neutral_level", "descriptions": {"<text>": [r, g, b]}}
     *   {"adapter": "external", "model_id": "<dir name under the weights root>"}
     * Toy priors use `schedule`.
     */
    std::unique_ptr<DiffusionPrior> make_prior(const nlohmann::json& spec, const NoiseSchedule& schedule,
                                               const std::optional<std::filesystem::path>& root = std::nullopt);

    /// {"adapter": "toy", ...toy codec config} or {"adapter": "external", "model_id"}.
    std::unique_ptr<Codec> make_codec(const nlohmann::json& spec,
                                      const std::optional<std::filesystem::path>& root = std::nullopt);

} // namespace latentedit
