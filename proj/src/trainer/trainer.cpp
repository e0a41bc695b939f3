// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "latentedit/trainer/trainer.hpp"
#include "latentedit/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace latentedit {

    TrainConfig TrainConfig::single_prompt() { return {}; }

    TrainConfig TrainConfig::multi_prompt() {
        TrainConfig c;
        c.epochs = 500;
        c.anneal = {300, 0.8, 50};
        c.prompt_mode = PromptMode::Multi;
        return c;
    }

    int TrainConfig::effective_warmup_epochs() const {
        if (warmup_epochs)
            return *warmup_epochs;
        return static_cast<int>(std::lround(0.1 * epochs));
    }

    void TrainConfig::validate() const {
        if (!(learning_rate > 0.0) || !(adam_eps > 0.0) || weight_decay < 0.0)
            throw ConfigError("learning rate and Adam epsilon must be positive, weight decay non-negative");
        if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
            throw ConfigError("Adam moments must lie in [0, 1)");
        if (batch_size == 0 || epochs <= 0 || render_resolution <= 0)
            throw ConfigError("batch size, epochs and render resolution must be positive");
        if (warmup_epochs && *warmup_epochs < 0)
            throw ConfigError("warm-up epochs must be non-negative");
        if (!(anneal.ratio > 0.0 && anneal.ratio < 1.0) || anneal.every_n_epochs <= 0 || anneal.start_epoch < 0)
            throw ConfigError("anneal ratio must lie in (0, 1) with a positive period");
        if (!(t_min >= 0.0 && t_min < t_max && t_max <= 1.0))
            throw ConfigError("timestep range must satisfy 0 <= t_min < t_max <= 1");
        if (max_steps && *max_steps <= 0)
            throw ConfigError("max_steps must be positive");
        if (checkpoint_every < 0)
            throw ConfigError("checkpoint_every must be non-negative");
        camera.validate();
        loss.validate();
        global_guidance.validate();
        local_guidance.validate();
    }

    void to_json(nlohmann::json& j, const TrainConfig& c) {
        j = nlohmann::json{{"learning_rate", c.learning_rate},
                           {"beta1", c.beta1},
                           {"beta2", c.beta2},
                           {"adam_eps", c.adam_eps},
                           {"weight_decay", c.weight_decay},
                           {"batch_size", c.batch_size},
                           {"epochs", c.epochs},
                           {"anneal",
                            {{"start_epoch", c.anneal.start_epoch},
                             {"ratio", c.anneal.ratio},
                             {"every_n_epochs", c.anneal.every_n_epochs}}},
                           {"t_min", c.t_min},
                           {"t_max", c.t_max},
                           {"seed", c.seed},
                           {"prompt_mode", c.prompt_mode == PromptMode::Single ? "single" : "multi"},
                           {"render_resolution", c.render_resolution},
                           {"checkpoint_every", c.checkpoint_every},
                           {"camera", c.camera},
                           {"loss", c.loss},
                           {"global_guidance", c.global_guidance},
                           {"local_guidance", c.local_guidance},
                           {"toggles",
                            {{"ti2i", c.toggles.ti2i},
                             {"t2i", c.toggles.t2i},
                             {"reg", c.toggles.reg},
                             {"mask", c.toggles.mask}}},
                           {"mask", c.mask}};
        j["warmup_epochs"] = c.warmup_epochs ? nlohmann::json(*c.warmup_epochs) : nlohmann::json(nullptr);
        j["max_steps"] = c.max_steps ? nlohmann::json(*c.max_steps) : nlohmann::json(nullptr);
    }

    void from_json(const nlohmann::json& j, TrainConfig& c) {
        if (j.value("prompt_mode", std::string("single")) == "multi")
            c = TrainConfig::multi_prompt();
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.beta1 = j.value("beta1", c.beta1);
        c.beta2 = j.value("beta2", c.beta2);
        c.adam_eps = j.value("adam_eps", c.adam_eps);
        c.weight_decay = j.value("weight_decay", c.weight_decay);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.epochs = j.value("epochs", c.epochs);
        if (j.contains("anneal")) {
            const auto& a = j.at("anneal");
            c.anneal.start_epoch = a.value("start_epoch", c.anneal.start_epoch);
            c.anneal.ratio = a.value("ratio", c.anneal.ratio);
            c.anneal.every_n_epochs = a.value("every_n_epochs", c.anneal.every_n_epochs);
        }
        c.t_min = j.value("t_min", c.t_min);
        c.t_max = j.value("t_max", c.t_max);
        c.seed = j.value("seed", c.seed);
        c.render_resolution = j.value("render_resolution", c.render_resolution);
        c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
        if (j.contains("camera"))
            c.camera = j.at("camera").get<CameraConfig>();
        if (j.contains("loss"))
            c.loss = j.at("loss").get<LossWeights>();
        if (j.contains("global_guidance"))
            c.global_guidance = j.at("global_guidance").get<GuidanceConfig>();
        if (j.contains("local_guidance"))
            c.local_guidance = j.at("local_guidance").get<GuidanceConfig>();
        if (j.contains("toggles")) {
            const auto& t = j.at("toggles");
            c.toggles.ti2i = t.value("ti2i", c.toggles.ti2i);
            c.toggles.t2i = t.value("t2i", c.toggles.t2i);
            c.toggles.reg = t.value("reg", c.toggles.reg);
            c.toggles.mask = t.value("mask", c.toggles.mask);
        }
        if (j.contains("mask"))
            c.mask = j.at("mask").get<MaskConfig>();
        if (j.contains("warmup_epochs") && !j.at("warmup_epochs").is_null())
            c.warmup_epochs = j.at("warmup_epochs").get<int>();
        if (j.contains("max_steps") && !j.at("max_steps").is_null())
            c.max_steps = j.at("max_steps").get<long>();
    }

    double anneal_max_timestep(int epoch, const TrainConfig& cfg) {
        if (epoch < 0)
            throw InputError("epoch must be non-negative");
        if (epoch < cfg.anneal.start_epoch)
            return cfg.t_max;
        const int k = (epoch - cfg.anneal.start_epoch) / cfg.anneal.every_n_epochs;
        const double raw = cfg.t_max * std::pow(cfg.anneal.ratio, k);
        return std::round(raw * 1e12) / 1e12;
    }

    double photometric_warmup(int epoch, const TrainConfig& cfg) {
        if (epoch < 0)
            throw InputError("epoch must be non-negative");
        const int warm = cfg.effective_warmup_epochs();
        if (warm == 0 || epoch >= warm)
            return cfg.loss.lambda_photo;
        return cfg.loss.lambda_photo * static_cast<double>(epoch) / static_cast<double>(warm);
    }

    void AdamW::step(TensorMap& params, const TensorMap& grads) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (auto& [name, p] : params) {
            auto git = grads.find(name);
            if (git == grads.end())
                continue;
            const Tensor& g = git->second;
            require_same_shape(p, g, "AdamW gradient");
            Tensor& m = m_.try_emplace(name, p.shape()).first->second;
            Tensor& v = v_.try_emplace(name, p.shape()).first->second;
            for (std::size_t i = 0; i < p.size(); ++i) {
                m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
                v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
                p[i] *= 1.0 - lr_ * wd_;
                p[i] -= lr_ * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
            }
        }
    }

    EditStepResult edit_step(const EditStepContext& ctx, const Latent& r_src, const Latent& r_edit,
                             const EditInstruction& y, Rng& rng) {
        if (!ctx.priors.ti2i)
            throw ConfigError("training needs a TI2I prior");
        const TrainConfig& cfg = ctx.cfg;
        const int res = cfg.render_resolution;

        // One viewpoint shared by the source and edited render.
        const Viewpoint vp = sample_viewpoint(rng, cfg.camera);
        const RenderedView src = ctx.codec.render_latent(r_src, vp, res);
        const RenderedView edt = ctx.codec.render_latent(r_edit, vp, res);

        const double hi = std::max(anneal_max_timestep(ctx.epoch, cfg), cfg.t_min);
        const int t = sample_timestep(rng, ctx.priors.ti2i->schedule().steps(), cfg.t_min, hi);
        const Tensor eps = Tensor::randn(edt.rgb.shape(), rng);

        LossWeights w = cfg.loss;
        w.lambda_photo = photometric_warmup(ctx.epoch, cfg);

        EditStepResult out;
        out.t = t;
        if (y.kind == EditKind::Global) {
            out.bundle = global_edit_gradients(*ctx.priors.ti2i, src.rgb, edt.rgb, src.depth, edt.depth, y.text, t,
                                               eps, cfg.global_guidance, w, cfg.toggles);
        } else {
            if (!ctx.priors.t2i)
                throw ConfigError("local edits need a T2I prior");
            std::optional<EditMask> mask;
            if (cfg.toggles.reg && cfg.toggles.mask) {
                MaskConfig mc = cfg.mask;
                mc.out_resolution = static_cast<std::size_t>(res);
                mask = extract_edit_mask(*ctx.priors.ti2i, src.rgb, y.text, y.attention_token.value_or(""), mc);
            }
            out.bundle = local_edit_gradients(*ctx.priors.ti2i, *ctx.priors.t2i, src.rgb, edt.rgb, src.depth,
                                              edt.depth, y.text, y.target_description, mask ? &*mask : nullptr, t,
                                              eps, cfg.local_guidance, w, cfg.toggles);
        }
        out.d_latent = ctx.codec.render_backward(r_edit, vp, res, out.bundle.d_image, out.bundle.d_depth);
        return out;
    }

    namespace {

        double total_loss(const std::map<std::string, double>& diag) {
            double s = 0.0;
            for (const auto& [k, v] : diag)
                s += v;
            return s;
        }

        bool grads_finite(const TensorMap& grads) {
            return std::all_of(grads.begin(), grads.end(), [](const auto& kv) { return all_finite(kv.second); });
        }

        std::string snapshot_json(long step, int epoch, const std::map<std::string, double>& diag) {
            nlohmann::json j{{"step", step}, {"epoch", epoch}};
            for (const auto& [k, v] : diag)
                j["terms"][k] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(std::to_string(v));
            return j.dump();
        }

        std::filesystem::path checkpoint_path(const std::filesystem::path& dir, int epoch) {
            char name[32];
            std::snprintf(name, sizeof(name), "epoch_%04d", epoch);
            return dir / name;
        }

        // Consecutive non-finite steps before training is aborted.
        constexpr int kDivergencePatience = 3;

    } // namespace

    TrainResult train(const TrainConfig& cfg, const TrainingDataset& data, Editor& editor, const Codec& codec,
                      PriorSet priors, const std::vector<EditInstruction>& instructions, const TrainHooks& hooks) {
        cfg.validate();
        if (!priors.ti2i)
            throw ConfigError("training needs a TI2I prior");
        if (instructions.empty())
            throw ConfigError("no instructions to train");
        if (cfg.prompt_mode == PromptMode::Single && instructions.size() != 1)
            throw ConfigError("single-prompt training takes exactly one instruction");

        std::map<std::string, EditInstruction> by_text;
        std::vector<std::string> texts;
        for (const auto& y : instructions) {
            y.validate();
            if (y.kind == EditKind::Local && !priors.t2i)
                throw ConfigError("local instruction '" + y.text + "' needs a T2I prior");
            editor.params().instruction_index(y.text);
            by_text[y.text] = y;
            texts.push_back(y.text);
        }
        {
            EditorParams& p = editor.mutable_params();
            p.instruction_kinds.clear();
            for (const auto& text : p.instructions) {
                auto it = by_text.find(text);
                p.instruction_kinds.push_back(it != by_text.end() ? it->second.kind : EditKind::Global);
            }
        }

        // The encoder sits outside the gradient path, so each source is encoded once.
        const LatentShape lshape = editor.params().latent_shape;
        std::vector<Latent> cache;
        cache.reserve(data.entries.size());
        for (const auto& e : data.entries) {
            Latent r = e.latent ? *e.latent : codec.encode(*e.asset);
            r.validate(lshape);
            cache.push_back(std::move(r));
        }

        auto pairs = data.pairs(texts);
        if (pairs.empty())
            throw DatasetError("no valid (instance, instruction) pairs");

        Rng rng(cfg.seed);
        AdamW opt(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps, cfg.weight_decay);
        TrainResult result;
        int bad_steps = 0;

        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            std::shuffle(pairs.begin(), pairs.end(), rng);
            const EditStepContext ctx{codec, priors, cfg, epoch};
            for (std::size_t start = 0; start < pairs.size(); start += cfg.batch_size) {
                const std::size_t stop = std::min(pairs.size(), start + cfg.batch_size);
                TensorMap grads = editor.zero_grads();
                std::map<std::string, double> diag;
                int t_last = 0;
                for (std::size_t b = start; b < stop; ++b) {
                    const auto& [idx, text] = pairs[b];
                    const Latent& r_src = cache[idx];
                    const std::size_t k = editor.params().instruction_index(text);
                    const Tensor eps = Tensor::randn(r_src.data.shape(), rng);
                    EditorTrace trace;
                    const Latent r_edit{
                        editor.forward(stack_input(r_src, eps, editor.schedule(), editor.params().tau), k, &trace),
                        r_src.codec_id};
                    const EditStepResult step = edit_step(ctx, r_src, r_edit, by_text.at(text), rng);
                    editor.backward(trace, step.d_latent, grads);
                    for (const auto& [name, v] : step.bundle.diagnostics)
                        diag[name] += v;
                    t_last = step.t;
                }
                const double scale = 1.0 / static_cast<double>(stop - start);
                for (auto& [name, g] : grads)
                    g *= scale;
                for (auto& [name, v] : diag)
                    v *= scale;

                if (!std::isfinite(total_loss(diag)) || !grads_finite(grads)) {
                    if (++bad_steps >= kDivergencePatience)
                        throw DivergenceError("training diverged: non-finite loss for " +
                                                  std::to_string(bad_steps) + " consecutive steps",
                                              snapshot_json(result.steps, epoch, diag));
                } else {
                    bad_steps = 0;
                    opt.step(editor.mutable_params().tensors, grads);
                }

                ++result.steps;
                result.last_diagnostics = diag;
                if (hooks.metrics)
                    hooks.metrics->record(result.steps, epoch, t_last, diag);
                if (hooks.on_step)
                    hooks.on_step(result.steps, epoch, editor);
                if (cfg.max_steps && result.steps >= *cfg.max_steps)
                    break;
            }
            result.epochs = epoch + 1;
            const bool last = epoch + 1 == cfg.epochs || (cfg.max_steps && result.steps >= *cfg.max_steps);
            if (!hooks.checkpoint_dir.empty() &&
                (last || (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0))) {
                const auto path = checkpoint_path(hooks.checkpoint_dir, epoch + 1);
                save_editor(path, editor.params(), cfg);
                result.checkpoints.push_back(path);
            }
            if (last)
                break;
        }
        return result;
    }

    Latent test_time_optimize(const Latent& r_src, const EditInstruction& y, const Codec& codec, PriorSet priors,
                              int steps, const TrainConfig& cfg, MetricsSink* metrics) {
        cfg.validate();
        y.validate();
        if (steps < 0)
            throw InputError("step count must be non-negative");
        r_src.validate(codec.latent_shape());
        if (steps == 0)
            return r_src;

        Rng rng(cfg.seed);
        // Decay would pull the latent towards zero, so it is off here.
        AdamW opt(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps, 0.0);
        TensorMap params{{"latent", r_src.data}};
        int bad_steps = 0;
        for (int s = 0; s < steps; ++s) {
            // Schedules progress over the run as if it spanned cfg.epochs epochs.
            const int epoch = static_cast<int>(static_cast<long>(s) * cfg.epochs / steps);
            const EditStepContext ctx{codec, priors, cfg, epoch};
            const Latent current{params.at("latent"), r_src.codec_id};
            // Each step averages batch_size (viewpoint, t, eps) samples, as in editor training.
            Tensor grad(current.data.shape());
            std::map<std::string, double> diag;
            int t_last = 0;
            for (std::size_t b = 0; b < cfg.batch_size; ++b) {
                const EditStepResult step = edit_step(ctx, r_src, current, y, rng);
                grad += step.d_latent;
                for (const auto& [name, v] : step.bundle.diagnostics)
                    diag[name] += v / static_cast<double>(cfg.batch_size);
                t_last = step.t;
            }
            grad *= 1.0 / static_cast<double>(cfg.batch_size);
            if (!std::isfinite(total_loss(diag)) || !all_finite(grad)) {
                if (++bad_steps >= kDivergencePatience)
                    throw DivergenceError("latent optimization diverged", snapshot_json(s, epoch, diag));
                continue;
            }
            bad_steps = 0;
            opt.step(params, {{"latent", grad}});
            if (metrics)
                metrics->record(s + 1, epoch, t_last, diag);
        }
        return {params.at("latent"), r_src.codec_id};
    }

} // namespace latentedit
