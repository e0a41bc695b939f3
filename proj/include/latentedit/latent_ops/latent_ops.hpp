// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "latentedit/editor/editor.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace latentedit {

    /// Mean edit residual of an instruction over `n_pairs` (source, edited) pairs.
    struct EditVector {
        Tensor delta;
        std::string instruction_text;
        int n_pairs = 1;

        void validate(const LatentShape& expected) const;
    };

    /// r_src + eta (r_edit - r_src). No clamping for eta outside [0, 1].
    Latent scale_edit(const Latent& r_src, const Latent& r_edit, double eta);

    struct EditChain {
        Latent final;
        /// chain[0] is the input, chain[i] the result of the i-th instruction.
        std::vector<Latent> chain;
    };

    /// Left fold of Editor::edit over `instructions`. Edit i uses seed + i.
    EditChain sequential_edit(const Editor& editor, const Latent& r, const std::vector<std::string>& instructions,
                              std::uint64_t seed = 0);

    struct EditStep {
        const Editor* editor = nullptr;
        std::string instruction;
    };

    /// Same fold with a possibly different (single-prompt) editor per step.
    EditChain sequential_edit(const std::vector<EditStep>& steps, const Latent& r, std::uint64_t seed = 0);

    EditVector extract_edit_vector(const std::vector<std::pair<Latent, Latent>>& pairs,
                                   const std::string& instruction);

    Latent apply_edit_vector(const Latent& r, const EditVector& v, double eta = 1.0);

    /// <path> holds a one-entry tensor container, <path>.json the manifest.
    void save_edit_vector(const std::filesystem::path& path, const EditVector& v);
    EditVector load_edit_vector(const std::filesystem::path& path);

} // namespace latentedit
