// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "latentedit/core/config.hpp"
#include "latentedit/core/schedule.hpp"
#include "latentedit/core/tensor_io.hpp"
#include "latentedit/core/types.hpp"

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

namespace latentedit {

    inline constexpr const char* kToyEditorArchitecture = "toy-residual-mlp-v2";

    /// Noised and clean halves of the editor input, each shaped like the latent.
    struct StackedInput {
        Tensor noised;
        Tensor clean;

        /// Concatenation [noised; clean] along the channel axis, shape {D, 2C}.
        Tensor stacked() const;
    };

    /// (alpha_tau r + sigma_tau eps, r).
    StackedInput stack_input(const Latent& r_src, const Tensor& eps, const NoiseSchedule& schedule, int tau);

    /// Deterministic text embedding in R^hidden derived from a hash of the text.
    Tensor hashed_text_embedding(const std::string& text, std::size_t hidden, double scale = 0.5);

    /*
     * Pretrained latent denoiser (x0-parameterized). The input projection acts on the
     * channels of each latent row, the residual head on the flattened result h in R^N:
     *
     *   h[d, :] = W_in v[d, :] + b_in
     *   out     = h + W2 tanh(W1 h + b1 + e(text)) + b2
     *
     * with W_in {C, C}. The editor reuses this structure with W_in widened to {C, 2C}.
     */
    struct BaseDenoiser {
        LatentShape latent_shape;
        std::size_t hidden = 0;
        TensorMap weights;

        Tensor text_embedding(const std::string& text) const { return hashed_text_embedding(text, hidden); }
        Tensor forward(const Tensor& noised, const std::string& text) const;

        /// W_in = I and every other weight zero: returns its input unchanged.
        static BaseDenoiser identity(LatentShape shape, std::size_t hidden);
        /// Gaussian weights with std `scale`; used to test initialization on a non-trivial base.
        static BaseDenoiser random(LatentShape shape, std::size_t hidden, Rng& rng, double scale = 0.1);
    };

    struct EditorParams {
        std::string architecture = kToyEditorArchitecture;
        LatentShape latent_shape;
        std::size_t hidden = 0;
        int tau = kDefaultEditorTau;
        ScheduleSpec schedule;
        /// Row k of "embed" conditions on instructions[k].
        std::vector<std::string> instructions;
        /// Kind of each instruction; empty means all global.
        std::vector<EditKind> instruction_kinds;
        /// w_in {C, 2C}, b_in {C}, w1 {H, N}, b1 {H}, w2 {N, H}, b2 {N}, embed {K, H}.
        TensorMap tensors;

        std::size_t width() const { return latent_shape.numel(); }
        /// Index of `instruction`, or InstructionError when it was not trained.
        std::size_t instruction_index(const std::string& instruction) const;
        EditKind instruction_kind(std::size_t k) const;
        void validate() const;
        /// Combined checksum of all tensors.
        std::uint64_t checksum() const;
    };

    struct InitOptions {
        int tau = kDefaultEditorTau;
        ScheduleSpec schedule;
        /// Ablation: random weights for the extra input channels and instruction
        /// embeddings instead of zeros / the base text embedding.
        bool random_init = false;
        double random_scale = 0.1;
        std::uint64_t seed = 0;
    };

    /// Copies the base weights, widens W_in with zero columns for the clean half and
    /// seeds each instruction embedding with the base text embedding.
    EditorParams init_from_pretrained(const BaseDenoiser& base, const LatentShape& latent_shape,
                                      const std::vector<std::string>& instructions, const InitOptions& options = {});

    /// Activations kept by forward() for backward().
    struct EditorTrace {
        Tensor z;
        Tensor h0;
        Tensor act;
        std::size_t instruction = 0;
    };

    class Editor {
    public:
        explicit Editor(EditorParams params);

        const EditorParams& params() const { return params_; }
        EditorParams& mutable_params() { return params_; }
        const NoiseSchedule& schedule() const { return schedule_; }

        /// Predicted clean edited latent, shape {D, C}.
        Tensor forward(const StackedInput& input, std::size_t instruction, EditorTrace* trace = nullptr) const;

        /// Accumulates d loss / d params into `grads` (same keys as params().tensors).
        void backward(const EditorTrace& trace, const Tensor& grad_out, TensorMap& grads) const;

        TensorMap zero_grads() const;

        /// One forward pass: r^e = g(stack_input(r^s, eps), y) with eps drawn from `rng`.
        Latent edit(const Latent& r_src, const std::string& instruction, Rng& rng) const;
        Latent edit(const Latent& r_src, const std::string& instruction, std::uint64_t seed) const;

        std::uint64_t forward_count() const { return forward_count_.load(); }
        void reset_forward_count() { forward_count_ = 0; }

    private:
        EditorParams params_;
        NoiseSchedule schedule_;
        mutable std::atomic<std::uint64_t> forward_count_{0};
    };

    /// Writes <dir>/editor.letc and <dir>/manifest.json.
    void save_editor(const std::filesystem::path& dir, const EditorParams& params,
                     const nlohmann::json& training_config = nlohmann::json::object());
    EditorParams load_editor(const std::filesystem::path& dir);

} // namespace latentedit
