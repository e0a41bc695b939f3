// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "latentedit/plugins/adapters.hpp"
#include "latentedit/codec/toy_codec.hpp"
#include "latentedit/core/config.hpp"
#include "latentedit/core/error.hpp"
#include "latentedit/prior/toy_prior.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdlib>

namespace latentedit {

    using nlohmann::json;

    namespace {

        // Removes the request directory when the call finishes.
        struct ScratchDir {
            std::filesystem::path path;

            ScratchDir() {
                static std::atomic<unsigned long> counter{0};
                path = std::filesystem::temp_directory_path() /
                       ("latentedit-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
                std::filesystem::create_directories(path);
            }
            ~ScratchDir() {
                std::error_code ec;
                std::filesystem::remove_all(path, ec);
            }
        };

        int run_process(const std::vector<std::string>& argv, const std::filesystem::path& cwd) {
            std::vector<char*> args;
            for (const auto& a : argv)
                args.push_back(const_cast<char*>(a.c_str()));
            args.push_back(nullptr);
            const pid_t pid = ::fork();
            if (pid < 0)
                throw BackendError("fork failed");
            if (pid == 0) {
                if (::chdir(cwd.c_str()) != 0)
                    ::_exit(126);
                ::execvp(args[0], args.data());
                ::_exit(127);
            }
            int status = 0;
            while (::waitpid(pid, &status, 0) < 0) {
                if (errno != EINTR)
                    throw BackendError("waitpid failed");
            }
            return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        }

        const Tensor& require(const TensorMap& m, const std::string& name, const std::string& model) {
            auto it = m.find(name);
            if (it == m.end())
                throw BackendError("adapter '" + model + "' response lacks '" + name + "'");
            return it->second;
        }

        class LatentField final : public FieldData {
        public:
            explicit LatentField(Latent latent)
                : latent(std::move(latent)) {}
            Latent latent;
        };

        // Schedule tables named in an adapter manifest are relative to the model directory.
        NoiseSchedule adapter_schedule(const ProcessAdapter& adapter) {
            ScheduleSpec spec = adapter.manifest().value("schedule", json::object()).get<ScheduleSpec>();
            if (!spec.table_path.empty() && std::filesystem::path(spec.table_path).is_relative())
                spec.table_path = (adapter.model_dir() / spec.table_path).string();
            return spec.build();
        }

        json viewpoint_json(const Viewpoint& vp) {
            return json{{"azimuth_deg", vp.azimuth_deg}, {"elevation_deg", vp.elevation_deg}, {"radius", vp.radius}};
        }

    } // namespace

    std::filesystem::path weights_root(const std::optional<std::filesystem::path>& override) {
        if (override)
            return *override;
        if (const char* env = std::getenv(kWeightsRootEnv); env && *env)
            return env;
        return "weights";
    }

    ProcessAdapter::ProcessAdapter(std::string model_id, const std::filesystem::path& root)
        : model_id_(std::move(model_id)), dir_(std::filesystem::absolute(root / model_id_)) {
        const auto manifest_path = dir_ / "adapter.json";
        if (!std::filesystem::exists(manifest_path))
            throw BackendError("no adapter for model '" + model_id_ + "': " + manifest_path.string() +
                               " not found (set " + kWeightsRootEnv + ")");
        try {
            manifest_ = read_json(manifest_path);
            command_ = manifest_.at("command").get<std::vector<std::string>>();
        } catch (const json::exception& e) {
            throw BackendError("bad adapter manifest " + manifest_path.string() + ": " + e.what());
        }
        if (command_.empty())
            throw BackendError("adapter manifest " + manifest_path.string() + " has an empty command");
    }

    ProcessAdapter::Response ProcessAdapter::call(const std::string& op, const json& request,
                                                  const TensorMap& tensors) const {
        ScratchDir scratch;
        write_json(scratch.path / "request.json", request);
        write_tensor_container(scratch.path / "request.letc", tensors);
        std::vector<std::string> argv = command_;
        argv.push_back(op);
        argv.push_back(scratch.path.string());
        const int code = run_process(argv, dir_);
        if (code != 0)
            throw BackendError("adapter '" + model_id_ + "' failed on '" + op + "' (exit " + std::to_string(code) +
                               ")");
        const auto out = scratch.path / "response.letc";
        if (!std::filesystem::exists(out))
            throw BackendError("adapter '" + model_id_ + "' wrote no response for '" + op + "'");
        Response r;
        try {
            r.tensors = read_tensor_container(out);
            const auto meta = scratch.path / "response.json";
            r.meta = std::filesystem::exists(meta) ? read_json(meta) : json::object();
        } catch (const Error& e) {
            throw BackendError("adapter '" + model_id_ + "' response unreadable: " + e.what());
        }
        return r;
    }

    ExternalPrior::ExternalPrior(std::string model_id, const std::filesystem::path& root)
        : adapter_(std::move(model_id), root), schedule_(adapter_schedule(adapter_)) {
        const json& m = adapter_.manifest();
        const std::string kind = m.value("kind", "");
        if (kind != "ti2i" && kind != "t2i")
            throw BackendError("adapter '" + adapter_.model_id() + "' is not a prior (kind '" + kind + "')");
        const json caps = m.value("capabilities", json::object());
        handle_.kind = kind == "ti2i" ? PriorKind::TI2I : PriorKind::T2I;
        handle_.model_id = adapter_.model_id();
        handle_.capabilities.supports_image_condition = kind == "ti2i";
        handle_.capabilities.supports_attention_maps = caps.value("attention_maps", false);
        handle_.capabilities.concurrent = caps.value("concurrent", false);
        handle_.validate();
    }

    Tensor ExternalPrior::do_predict(const Tensor& x_t, const Tensor* image_cond,
                                     const std::optional<std::string>& text, int t) const {
        TensorMap in{{"x_t", x_t}};
        if (image_cond)
            in["image_cond"] = *image_cond;
        json req{{"t", t}, {"text", text ? json(*text) : json(nullptr)}};
        const auto r = adapter_.call("predict", req, in);
        Tensor eps = require(r.tensors, "eps_hat", adapter_.model_id());
        if (eps.shape() != x_t.shape())
            throw BackendError("adapter '" + adapter_.model_id() + "' returned eps_hat of shape " + eps.shape_str());
        return eps;
    }

    AttentionStack ExternalPrior::do_attention(const Tensor& x_src, const std::string& text, const std::string& token,
                                               int t) const {
        if (!handle_.capabilities.supports_attention_maps)
            return DiffusionPrior::do_attention(x_src, text, token, t);
        const auto r = adapter_.call("attention", json{{"text", text}, {"token", token}, {"t", t}}, {{"x_src", x_src}});
        AttentionStack stack;
        stack.t = t;
        stack.resolution = r.meta.value("resolution", std::size_t{32});
        for (const auto& [name, map] : r.tensors)
            stack.maps.push_back(map);
        return stack;
    }

    ExternalCodec::ExternalCodec(std::string model_id, const std::filesystem::path& root)
        : adapter_(std::move(model_id), root) {
        const json& m = adapter_.manifest();
        if (m.value("kind", "") != "codec")
            throw BackendError("adapter '" + adapter_.model_id() + "' is not a codec");
        try {
            const auto shape = m.at("latent_shape").get<std::vector<std::size_t>>();
            if (shape.size() != 2)
                throw BackendError("codec latent_shape must have two entries");
            shape_ = {shape[0], shape[1]};
        } catch (const json::exception& e) {
            throw BackendError("bad codec manifest for '" + adapter_.model_id() + "': " + e.what());
        }
        far_ = m.value("far_plane", far_);
        concurrent_ = m.value("concurrent", false);
    }

    Latent ExternalCodec::encode(const AssetSource& asset) const {
        asset.validate();
        TensorMap in;
        if (asset.points)
            in["points"] = asset.points->xyz_rgb;
        for (std::size_t k = 0; k < asset.views.size(); ++k)
            in["view_" + std::to_string(k)] = asset.views[k];
        const auto r = adapter_.call("encode", json{{"class_label", asset.class_label}, {"instance_id", asset.instance_id}},
                                     in);
        Latent out{require(r.tensors, "latent", id()), id()};
        out.validate(shape_);
        return out;
    }

    FieldModel ExternalCodec::decode(const Latent& latent) const {
        latent.validate(shape_);
        return {id(), std::make_shared<const LatentField>(latent)};
    }

    RenderedView ExternalCodec::render(const FieldModel& field, const Viewpoint& vp, int resolution) const {
        const auto* f = dynamic_cast<const LatentField*>(field.impl.get());
        if (!f || field.decoder_id != id())
            throw InputError("field was not decoded by codec '" + id() + "'");
        const auto r = adapter_.call("render", json{{"viewpoint", viewpoint_json(vp)}, {"resolution", resolution}},
                                     {{"latent", f->latent.data}});
        return {require(r.tensors, "rgb", id()), require(r.tensors, "depth", id()), vp};
    }

    Tensor ExternalCodec::render_backward(const Latent& latent, const Viewpoint& vp, int resolution,
                                          const Tensor& grad_rgb, const Tensor& grad_depth) const {
        const auto r = adapter_.call("render_backward",
                                     json{{"viewpoint", viewpoint_json(vp)}, {"resolution", resolution}},
                                     {{"latent", latent.data}, {"grad_rgb", grad_rgb}, {"grad_depth", grad_depth}});
        Tensor g = require(r.tensors, "grad_latent", id());
        if (g.shape() != latent.data.shape())
            throw BackendError("adapter '" + id() + "' returned a latent gradient of shape " + g.shape_str());
        return g;
    }

    namespace {

        std::unique_ptr<DiffusionPrior> build_prior(const json& spec, const NoiseSchedule& schedule,
                                                    const std::optional<std::filesystem::path>& root) {
            const std::string adapter = spec.value("adapter", "");
            if (adapter == "toy-ti2i") {
                std::map<std::string, ImageEdit> edits;
                const json table = spec.value("edits", json::object());
                for (const auto& [text, e] : table.items()) {
                    const auto f = e.at("tint").get<std::vector<double>>();
                    if (f.size() != 3)
                        throw ConfigError("tint for '" + text + "' needs three factors");
                    edits[text] = tint_edit({f[0], f[1], f[2]});
                }
                return make_toy_ti2i_prior(schedule, spec.value("data_std", 0.01), std::move(edits),
                                           spec.value("neutral_level", 0.5));
            }
            if (adapter == "toy-t2i") {
                std::map<std::string, Vec3> colors;
                const json table = spec.value("descriptions", json::object());
                for (const auto& [text, c] : table.items()) {
                    const auto v = c.get<std::vector<double>>();
                    if (v.size() != 3)
                        throw ConfigError("colour for '" + text + "' needs three entries");
                    colors[text] = {v[0], v[1], v[2]};
                }
                return make_toy_t2i_prior(schedule, spec.value("data_std", 0.01), std::move(colors),
                                          spec.value("neutral_level", 0.5));
            }
            if (adapter == "external")
                return std::make_unique<ExternalPrior>(spec.at("model_id").get<std::string>(), weights_root(root));
            throw ConfigError("unknown prior adapter '" + adapter + "'");
        }

        std::unique_ptr<Codec> build_codec(const json& spec, const std::optional<std::filesystem::path>& root) {
            const std::string adapter = spec.value("adapter", "toy");
            if (adapter == "toy")
                return std::make_unique<ToyCodec>(spec.get<ToyCodecConfig>());
            if (adapter == "external")
                return std::make_unique<ExternalCodec>(spec.at("model_id").get<std::string>(), weights_root(root));
            throw ConfigError("unknown codec adapter '" + adapter + "'");
        }

    } // namespace

    std::unique_ptr<DiffusionPrior> make_prior(const json& spec, const NoiseSchedule& schedule,
                                               const std::optional<std::filesystem::path>& root) {
        if (!spec.is_object())
            throw ConfigError("prior spec must be a JSON object");
        try {
            return build_prior(spec, schedule, root);
        } catch (const json::exception& e) {
            throw ConfigError(std::string("bad prior spec: ") + e.what());
        }
    }

    std::unique_ptr<Codec> make_codec(const json& spec, const std::optional<std::filesystem::path>& root) {
        if (!spec.is_object())
            throw ConfigError("codec spec must be a JSON object");
        try {
            return build_codec(spec, root);
        } catch (const json::exception& e) {
            throw ConfigError(std::string("bad codec spec: ") + e.what());
        }
    }

} // namespace latentedit
