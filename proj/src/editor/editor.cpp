// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "latentedit/editor/editor.hpp"
#include "latentedit/core/error.hpp"

#include <cmath>
#include <fstream>

namespace latentedit {

    namespace {

        // y = W x + b for W {rows, cols}. Terms are summed in column order, then the bias.
        Tensor affine(const Tensor& w, const Tensor& x, const Tensor& b) {
            const std::size_t rows = w.dim(0), cols = w.dim(1);
            Tensor y({rows});
            for (std::size_t i = 0; i < rows; ++i) {
                const double* wi = w.data() + i * cols;
                double acc = 0.0;
                for (std::size_t j = 0; j < cols; ++j)
                    acc += wi[j] * x[j];
                y[i] = acc + b[i];
            }
            return y;
        }

        // Row-wise projection: y[d, :] = W x[d, :] + b for x {D, cols}, W {rows, cols}.
        Tensor project_rows(const Tensor& w, const Tensor& x, const Tensor& b) {
            const std::size_t d = x.dim(0), rows = w.dim(0), cols = w.dim(1);
            Tensor y({d * rows});
            for (std::size_t r = 0; r < d; ++r) {
                const double* xr = x.data() + r * cols;
                for (std::size_t i = 0; i < rows; ++i) {
                    const double* wi = w.data() + i * cols;
                    double acc = 0.0;
                    for (std::size_t j = 0; j < cols; ++j)
                        acc += wi[j] * xr[j];
                    y[r * rows + i] = acc + b[i];
                }
            }
            return y;
        }

        // Shared residual head: out = h + W2 tanh(W1 h + b1 + e) + b2.
        Tensor residual_head(const TensorMap& w, const Tensor& h, const Tensor& e, Tensor* act_out) {
            Tensor u = affine(w.at("w1"), h, w.at("b1"));
            for (std::size_t i = 0; i < u.size(); ++i)
                u[i] = std::tanh(u[i] + e[i]);
            Tensor out = affine(w.at("w2"), u, w.at("b2"));
            for (std::size_t i = 0; i < out.size(); ++i)
                out[i] += h[i];
            if (act_out)
                *act_out = std::move(u);
            return out;
        }

        const Tensor& require(const TensorMap& m, const std::string& key) {
            auto it = m.find(key);
            if (it == m.end())
                throw InitError("missing weight '" + key + "'");
            return it->second;
        }

        void expect_shape(const TensorMap& m, const std::string& key, const Shape& shape) {
            const Tensor& t = require(m, key);
            if (t.shape() != shape)
                throw InitError("weight '" + key + "' has shape " + t.shape_str() + ", expected " +
                                shape_to_string(shape));
        }

        std::uint64_t fnv1a(std::string_view s) {
            std::uint64_t h = 1469598103934665603ULL;
            for (unsigned char c : s) {
                h ^= c;
                h *= 1099511628211ULL;
            }
            return h;
        }

    } // namespace

    Tensor StackedInput::stacked() const {
        require_same_shape(noised, clean, "stacked input halves");
        const std::size_t d = noised.dim(0), c = noised.dim(1);
        Tensor out({d, 2 * c});
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < c; ++j) {
                out.at(i, j) = noised.at(i, j);
                out.at(i, c + j) = clean.at(i, j);
            }
        return out;
    }

    StackedInput stack_input(const Latent& r_src, const Tensor& eps, const NoiseSchedule& schedule, int tau) {
        if (r_src.data.ndim() != 2)
            throw ShapeError("latent must be {D, C}, got " + r_src.data.shape_str());
        return {noise_sample(r_src.data, schedule, tau, eps), r_src.data};
    }

    Tensor hashed_text_embedding(const std::string& text, std::size_t hidden, double scale) {
        std::seed_seq seq{static_cast<std::uint32_t>(fnv1a(text)), static_cast<std::uint32_t>(fnv1a(text) >> 32)};
        Rng rng(seq);
        return Tensor::randn({hidden}, rng, scale);
    }

    Tensor BaseDenoiser::forward(const Tensor& noised, const std::string& text) const {
        if (noised.shape() != latent_shape.as_shape())
            throw ShapeError("base denoiser input " + noised.shape_str() + " != " +
                             shape_to_string(latent_shape.as_shape()));
        const Tensor h = project_rows(weights.at("w_in"), noised, weights.at("b_in"));
        return residual_head(weights, h, text_embedding(text), nullptr).reshaped(latent_shape.as_shape());
    }

    BaseDenoiser BaseDenoiser::identity(LatentShape shape, std::size_t hidden) {
        const std::size_t n = shape.numel(), c = shape.cols;
        BaseDenoiser base{shape, hidden, {}};
        Tensor w_in({c, c});
        for (std::size_t i = 0; i < c; ++i)
            w_in.at(i, i) = 1.0;
        base.weights["w_in"] = std::move(w_in);
        base.weights["b_in"] = Tensor({c});
        base.weights["w1"] = Tensor({hidden, n});
        base.weights["b1"] = Tensor({hidden});
        base.weights["w2"] = Tensor({n, hidden});
        base.weights["b2"] = Tensor({n});
        return base;
    }

    BaseDenoiser BaseDenoiser::random(LatentShape shape, std::size_t hidden, Rng& rng, double scale) {
        const std::size_t n = shape.numel(), c = shape.cols;
        BaseDenoiser base{shape, hidden, {}};
        base.weights["w_in"] = Tensor::randn({c, c}, rng, scale);
        base.weights["b_in"] = Tensor::randn({c}, rng, scale);
        base.weights["w1"] = Tensor::randn({hidden, n}, rng, scale);
        base.weights["b1"] = Tensor::randn({hidden}, rng, scale);
        base.weights["w2"] = Tensor::randn({n, hidden}, rng, scale);
        base.weights["b2"] = Tensor::randn({n}, rng, scale);
        return base;
    }

    std::size_t EditorParams::instruction_index(const std::string& instruction) const {
        for (std::size_t k = 0; k < instructions.size(); ++k)
            if (instructions[k] == instruction)
                return k;
        if (instructions.size() == 1)
            throw InstructionError("single-prompt editor was trained on '" + instructions.front() +
                                   "', not '" + instruction + "'");
        throw InstructionError("instruction '" + instruction + "' is not among the " +
                               std::to_string(instructions.size()) + " trained prompts");
    }

    void EditorParams::validate() const {
        if (architecture != kToyEditorArchitecture)
            throw InitError("unsupported editor architecture '" + architecture + "'");
        const std::size_t n = width(), c = latent_shape.cols, h = hidden, k = instructions.size();
        if (n == 0 || h == 0)
            throw InitError("editor latent shape and hidden width must be non-zero");
        if (k == 0)
            throw InitError("editor needs at least one instruction");
        expect_shape(tensors, "w_in", {c, 2 * c});
        expect_shape(tensors, "b_in", {c});
        expect_shape(tensors, "w1", {h, n});
        expect_shape(tensors, "b1", {h});
        expect_shape(tensors, "w2", {n, h});
        expect_shape(tensors, "b2", {n});
        expect_shape(tensors, "embed", {k, h});
        if (tensors.size() != 7)
            throw InitError("editor has unexpected extra weights");
        if (!instruction_kinds.empty() && instruction_kinds.size() != k)
            throw InitError("editor has " + std::to_string(instruction_kinds.size()) + " instruction kinds for " +
                            std::to_string(k) + " instructions");
    }

    EditKind EditorParams::instruction_kind(std::size_t k) const {
        if (k >= instructions.size())
            throw IndexError("instruction index " + std::to_string(k) + " out of range");
        return instruction_kinds.empty() ? EditKind::Global : instruction_kinds[k];
    }

    std::uint64_t EditorParams::checksum() const {
        std::uint64_t h = 1469598103934665603ULL;
        for (const auto& [name, t] : tensors) {
            h ^= fnv1a(name);
            h *= 1099511628211ULL;
            h ^= latentedit::checksum(t);
            h *= 1099511628211ULL;
        }
        return h;
    }

    EditorParams init_from_pretrained(const BaseDenoiser& base, const LatentShape& latent_shape,
                                      const std::vector<std::string>& instructions, const InitOptions& options) {
        if (base.latent_shape != latent_shape)
            throw InitError("base denoiser latent shape " + shape_to_string(base.latent_shape.as_shape()) +
                            " does not match editor latent shape " + shape_to_string(latent_shape.as_shape()));
        if (instructions.empty())
            throw InitError("editor needs at least one instruction");
        const std::size_t n = latent_shape.numel(), c = latent_shape.cols, h = base.hidden;
        expect_shape(base.weights, "w_in", {c, c});
        expect_shape(base.weights, "b_in", {c});
        expect_shape(base.weights, "w1", {h, n});
        expect_shape(base.weights, "b1", {h});
        expect_shape(base.weights, "w2", {n, h});
        expect_shape(base.weights, "b2", {n});
        if (base.weights.size() != 6)
            throw InitError("base denoiser has unexpected extra weights");

        Rng rng(options.seed);
        EditorParams p;
        p.latent_shape = latent_shape;
        p.hidden = h;
        p.tau = options.tau;
        p.schedule = options.schedule;
        p.instructions = instructions;

        const Tensor& base_in = base.weights.at("w_in");
        Tensor w_in({c, 2 * c});
        for (std::size_t i = 0; i < c; ++i) {
            for (std::size_t j = 0; j < c; ++j)
                w_in.at(i, j) = base_in.at(i, j);
            if (options.random_init)
                for (std::size_t j = 0; j < c; ++j)
                    w_in.at(i, c + j) = std::normal_distribution<double>(0.0, options.random_scale)(rng);
        }
        p.tensors["w_in"] = std::move(w_in);
        for (const char* key : {"b_in", "w1", "b1", "w2", "b2"})
            p.tensors[key] = base.weights.at(key);

        Tensor embed({instructions.size(), h});
        for (std::size_t k = 0; k < instructions.size(); ++k) {
            const Tensor e = options.random_init ? Tensor::randn({h}, rng, options.random_scale)
                                                 : base.text_embedding(instructions[k]);
            for (std::size_t j = 0; j < h; ++j)
                embed.at(k, j) = e[j];
        }
        p.tensors["embed"] = std::move(embed);
        p.validate();
        return p;
    }

    Editor::Editor(EditorParams params) : params_(std::move(params)), schedule_(params_.schedule.build()) {
        params_.validate();
        schedule_.at(params_.tau);
    }

    Tensor Editor::forward(const StackedInput& input, std::size_t instruction, EditorTrace* trace) const {
        const Shape lshape = params_.latent_shape.as_shape();
        if (input.noised.shape() != lshape || input.clean.shape() != lshape)
            throw ShapeError("editor input halves must be " + shape_to_string(lshape));
        if (instruction >= params_.instructions.size())
            throw InstructionError("instruction index out of range");
        ++forward_count_;

        const std::size_t hdim = params_.hidden;
        // Per row, noised channels are summed before the clean ones, so zero clean-channel
        // weights leave the base denoiser's arithmetic untouched.
        Tensor z = input.stacked();
        const auto& w = params_.tensors;
        Tensor h0 = project_rows(w.at("w_in"), z, w.at("b_in"));
        Tensor e({hdim});
        const Tensor& embed = w.at("embed");
        for (std::size_t j = 0; j < hdim; ++j)
            e[j] = embed.at(instruction, j);
        Tensor act;
        Tensor out = residual_head(w, h0, e, &act);
        if (trace) {
            trace->z = std::move(z);
            trace->h0 = std::move(h0);
            trace->act = std::move(act);
            trace->instruction = instruction;
        }
        return out.reshaped(lshape);
    }

    TensorMap Editor::zero_grads() const {
        TensorMap g;
        for (const auto& [name, t] : params_.tensors)
            g[name] = Tensor(t.shape());
        return g;
    }

    void Editor::backward(const EditorTrace& trace, const Tensor& grad_out, TensorMap& grads) const {
        const std::size_t n = params_.width(), hdim = params_.hidden;
        if (grad_out.size() != n)
            throw ShapeError("editor grad_out has " + std::to_string(grad_out.size()) + " entries, expected " +
                             std::to_string(n));
        const auto& w = params_.tensors;
        const Tensor& w1 = w.at("w1");
        const Tensor& w2 = w.at("w2");

        Tensor& gw2 = grads.at("w2");
        Tensor& gb2 = grads.at("b2");
        Tensor g_act({hdim});
        for (std::size_t i = 0; i < n; ++i) {
            const double go = grad_out[i];
            gb2[i] += go;
            for (std::size_t j = 0; j < hdim; ++j) {
                gw2.at(i, j) += go * trace.act[j];
                g_act[j] += w2.at(i, j) * go;
            }
        }

        Tensor g_u({hdim});
        for (std::size_t j = 0; j < hdim; ++j)
            g_u[j] = g_act[j] * (1.0 - trace.act[j] * trace.act[j]);

        Tensor& gw1 = grads.at("w1");
        Tensor& gb1 = grads.at("b1");
        Tensor& gembed = grads.at("embed");
        Tensor g_h0({n});
        for (std::size_t i = 0; i < n; ++i)
            g_h0[i] = grad_out[i];
        for (std::size_t j = 0; j < hdim; ++j) {
            gb1[j] += g_u[j];
            gembed.at(trace.instruction, j) += g_u[j];
            for (std::size_t i = 0; i < n; ++i) {
                gw1.at(j, i) += g_u[j] * trace.h0[i];
                g_h0[i] += w1.at(j, i) * g_u[j];
            }
        }

        Tensor& gw_in = grads.at("w_in");
        Tensor& gb_in = grads.at("b_in");
        const std::size_t c = params_.latent_shape.cols, rows = params_.latent_shape.rows;
        for (std::size_t r = 0; r < rows; ++r) {
            const double* zr = trace.z.data() + r * 2 * c;
            for (std::size_t i = 0; i < c; ++i) {
                const double g = g_h0[r * c + i];
                gb_in[i] += g;
                double* wrow = gw_in.data() + i * 2 * c;
                for (std::size_t j = 0; j < 2 * c; ++j)
                    wrow[j] += g * zr[j];
            }
        }
    }

    Latent Editor::edit(const Latent& r_src, const std::string& instruction, Rng& rng) const {
        r_src.validate(params_.latent_shape);
        const std::size_t k = params_.instruction_index(instruction);
        const Tensor eps = Tensor::randn(r_src.data.shape(), rng);
        const StackedInput input = stack_input(r_src, eps, schedule_, params_.tau);
        return {forward(input, k), r_src.codec_id};
    }

    Latent Editor::edit(const Latent& r_src, const std::string& instruction, std::uint64_t seed) const {
        Rng rng(seed);
        return edit(r_src, instruction, rng);
    }

    void save_editor(const std::filesystem::path& dir, const EditorParams& params,
                     const nlohmann::json& training_config) {
        params.validate();
        std::filesystem::create_directories(dir);
        write_tensor_container(dir / "editor.letc", params.tensors);
        std::vector<std::string> kind_names;
        for (std::size_t k = 0; k < params.instructions.size(); ++k)
            kind_names.push_back(to_string(params.instruction_kind(k)));
        nlohmann::json manifest{{"architecture", params.architecture},
                                {"latent_shape", {params.latent_shape.rows, params.latent_shape.cols}},
                                {"hidden", params.hidden},
                                {"tau", params.tau},
                                {"schedule", params.schedule},
                                {"instructions", params.instructions},
                                {"instruction_kinds", kind_names},
                                {"training_config_hash", config_hash(training_config)},
                                {"training_config", training_config}};
        write_json(dir / "manifest.json", manifest);
    }

    EditorParams load_editor(const std::filesystem::path& dir) {
        const nlohmann::json m = read_json(dir / "manifest.json");
        EditorParams p;
        try {
            p.architecture = m.at("architecture").get<std::string>();
            const auto shape = m.at("latent_shape").get<std::vector<std::size_t>>();
            if (shape.size() != 2)
                throw FormatError("manifest latent_shape must have two entries");
            p.latent_shape = {shape[0], shape[1]};
            p.hidden = m.at("hidden").get<std::size_t>();
            p.tau = m.at("tau").get<int>();
            p.schedule = m.at("schedule").get<ScheduleSpec>();
            p.instructions = m.at("instructions").get<std::vector<std::string>>();
            for (const auto& kind : m.value("instruction_kinds", std::vector<std::string>{}))
                p.instruction_kinds.push_back(parse_edit_kind(kind));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("bad editor manifest in " + dir.string() + ": " + e.what());
        }
        p.tensors = read_tensor_container(dir / "editor.letc");
        p.validate();
        return p;
    }

} // namespace latentedit
