// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "latentedit/codec/codec.hpp"

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace latentedit {

    enum class AssetOrigin {
        Scanned,
        Generated
    };

    std::string to_string(AssetOrigin origin);

    struct DatasetEntry {
        std::optional<AssetSource> asset;
        /// Pre-encoded latent; used instead of encoding `asset` when present.
        std::optional<Latent> latent;
        std::string class_label;
        std::string instance_id;
        AssetOrigin origin = AssetOrigin::Generated;
        /// Image-text embedding score of a generated asset against its class prompt.
        std::optional<double> clip_score;
    };

    using InstructionValidity = std::map<std::string, std::set<std::string>>;

    struct TrainingDataset {
        std::vector<DatasetEntry> entries;
        InstructionValidity validity;

        /// Every (entry index, instruction) pair allowed by the validity table, in entry order.
        std::vector<std::pair<std::size_t, std::string>> pairs(const std::vector<std::string>& instructions) const;
    };

    /// Filter for generated assets. `threshold` drops entries scoring below it; `top_k`
    /// keeps the k best-scoring generated entries per class. Scanned assets are never filtered.
    struct ClipFilter {
        std::optional<double> threshold;
        std::optional<std::size_t> top_k = 10;
    };

    /// Instruction -> valid classes as used for the full-scale editors.
    InstructionValidity default_instruction_validity();
    std::vector<std::string> generated_classes();
    std::vector<std::string> scanned_classes();

    /// Applies the filter and drops entries whose class no instruction accepts.
    /// Throws DatasetError when nothing is left.
    TrainingDataset build_dataset(std::vector<DatasetEntry> sources, InstructionValidity validity,
                                  const std::optional<ClipFilter>& filter = ClipFilter{});

    /// `classes` x `per_class` toy entries with random latents; every class valid for every instruction.
    TrainingDataset toy_dataset(const std::vector<std::string>& classes, std::size_t per_class,
                                const std::vector<std::string>& instructions,
                                const std::function<Latent(Rng&)>& sample, Rng& rng);

} // namespace latentedit
