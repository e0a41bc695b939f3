// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "latentedit/distill/distill.hpp"
#include "latentedit/editor/editor.hpp"
#include "latentedit/prior/mask.hpp"
#include "latentedit/trainer/dataset.hpp"

#include <filesystem>
#include <functional>
#include <optional>

namespace latentedit {

    enum class PromptMode {
        Single,
        Multi
    };

    struct AnnealConfig {
        int start_epoch = 100;
        double ratio = 0.8;
        int every_n_epochs = 10;

        bool operator==(const AnnealConfig&) const = default;
    };

    struct TrainConfig {
        double learning_rate = 1e-4;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double adam_eps = 1e-8;
        double weight_decay = 1e-2;
        std::size_t batch_size = 64;
        int epochs = 150;
        /// Linear photometric warm-up length; unset means 10% of `epochs`.
        std::optional<int> warmup_epochs;
        AnnealConfig anneal;
        double t_min = 0.02;
        double t_max = 0.98;
        std::uint64_t seed = 0;
        PromptMode prompt_mode = PromptMode::Single;
        int render_resolution = 128;
        /// Stop after this many optimizer steps even if epochs remain.
        std::optional<long> max_steps;
        /// Save a checkpoint every this many epochs (0 = only at the end).
        int checkpoint_every = 0;
        CameraConfig camera;
        LossWeights loss;
        GuidanceConfig global_guidance = GuidanceConfig::global_defaults();
        GuidanceConfig local_guidance = GuidanceConfig::local_defaults();
        LossToggles toggles;
        MaskConfig mask;

        /// 150 epochs, annealing from epoch 100 every 10 epochs.
        static TrainConfig single_prompt();
        /// 500 epochs, annealing from epoch 300 every 50 epochs.
        static TrainConfig multi_prompt();

        int effective_warmup_epochs() const;
        void validate() const;
        bool operator==(const TrainConfig&) const = default;
    };

    void to_json(nlohmann::json& j, const TrainConfig& c);
    void from_json(const nlohmann::json& j, TrainConfig& c);

    /// Maximum sampled timestep fraction at `epoch`: t_max before the start epoch, then
    /// t_max * ratio^floor((epoch - start) / every_n), rounded to 12 decimals.
    double anneal_max_timestep(int epoch, const TrainConfig& cfg);

    /// lambda_photo ramped linearly from 0 over the warm-up epochs.
    double photometric_warmup(int epoch, const TrainConfig& cfg);

    /// Diffusion priors consulted during training. `t2i` is required for local edits.
    struct PriorSet {
        const DiffusionPrior* ti2i = nullptr;
        const DiffusionPrior* t2i = nullptr;
    };

    /// Render both latents from one viewpoint, compute the kind-appropriate bundle and pull it
    /// back to the edited latent.
    struct EditStepResult {
        Tensor d_latent;
        GradientBundle bundle;
        int t = 0;
    };

    struct EditStepContext {
        const Codec& codec;
        PriorSet priors;
        const TrainConfig& cfg;
        int epoch = 0;
    };

    EditStepResult edit_step(const EditStepContext& ctx, const Latent& r_src, const Latent& r_edit,
                             const EditInstruction& y, Rng& rng);

    struct TrainResult {
        long steps = 0;
        int epochs = 0;
        std::vector<std::filesystem::path> checkpoints;
        std::map<std::string, double> last_diagnostics;
    };

    struct TrainHooks {
        MetricsSink* metrics = nullptr;
        /// Called after each optimizer step.
        std::function<void(long step, int epoch, const Editor& editor)> on_step;
        /// Directory for checkpoints; none are written when empty.
        std::filesystem::path checkpoint_dir;
    };

    /// Optimizes `editor` in place.
    TrainResult train(const TrainConfig& cfg, const TrainingDataset& data, Editor& editor, const Codec& codec,
                      PriorSet priors, const std::vector<EditInstruction>& instructions,
                      const TrainHooks& hooks = {});

    /// Optimizes the latent itself under the same loss for `steps` AdamW steps.
    Latent test_time_optimize(const Latent& r_src, const EditInstruction& y, const Codec& codec, PriorSet priors,
                              int steps, const TrainConfig& cfg, MetricsSink* metrics = nullptr);

    /// AdamW state over a set of named tensors.
    class AdamW {
    public:
        AdamW(double lr, double beta1, double beta2, double eps, double weight_decay)
            : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), wd_(weight_decay) {}

        void step(TensorMap& params, const TensorMap& grads);
        long steps() const { return t_; }

    private:
        double lr_, beta1_, beta2_, eps_, wd_;
        long t_ = 0;
        TensorMap m_, v_;
    };

} // namespace latentedit
