// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "latentedit/trainer/dataset.hpp"
#include "latentedit/core/error.hpp"

#include <algorithm>

namespace latentedit {

    std::string to_string(AssetOrigin origin) { return origin == AssetOrigin::Scanned ? "scanned" : "generated"; }

    std::vector<std::pair<std::size_t, std::string>> TrainingDataset::pairs(
        const std::vector<std::string>& instructions) const {
        std::vector<std::pair<std::size_t, std::string>> out;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            for (const auto& y : instructions) {
                auto it = validity.find(y);
                if (it != validity.end() && it->second.count(entries[i].class_label))
                    out.emplace_back(i, y);
            }
        }
        return out;
    }

    std::vector<std::string> generated_classes() {
        return {"apple",   "banana",   "candle",    "cat",       "chair",     "corgi",  "dinosaur",
                "doctor",  "duck",     "guitar",    "horse",     "microphone", "penguin", "pineapple",
                "policeman", "robot",  "teapot",    "teddy bear", "toy plane", "vase"};
    }

    std::vector<std::string> scanned_classes() {
        return {"bear",  "cat",   "cow",    "dinosaur", "dog",     "duck",      "elephant",
                "giraffe", "guitar", "hippo", "mouse",  "panda",   "pineapple", "rabbit",
                "rhino", "scissor", "teapot", "teddy bear", "toy plane", "vase", "zebra"};
    }

    InstructionValidity default_instruction_validity() {
        std::set<std::string> all;
        for (const auto& c : generated_classes())
            all.insert(c);
        for (const auto& c : scanned_classes())
            all.insert(c);

        const std::set<std::string> animals{"cat",   "corgi", "dinosaur", "duck",  "horse",   "penguin",
                                            "teddy bear", "bear", "cow",  "dog",   "elephant", "giraffe",
                                            "hippo", "mouse", "panda",    "rabbit", "rhino",  "zebra"};
        std::set<std::string> wearable = animals;
        wearable.insert("doctor");
        wearable.insert("policeman");

        return {{"Make it look like made of gold", all},
                {"Make it look like a tiger", animals},
                {"Make its color look like rainbow", all},
                {"Add a Santa hat to it", wearable},
                {"Make it wear a blue sweater", wearable}};
    }

    TrainingDataset build_dataset(std::vector<DatasetEntry> sources, InstructionValidity validity,
                                  const std::optional<ClipFilter>& filter) {
        std::set<std::string> valid_classes;
        for (const auto& [y, classes] : validity)
            valid_classes.insert(classes.begin(), classes.end());

        std::vector<bool> keep(sources.size(), true);
        for (std::size_t i = 0; i < sources.size(); ++i) {
            const auto& e = sources[i];
            if (!e.asset && !e.latent)
                throw DatasetError("entry '" + e.instance_id + "' has neither an asset nor a latent");
            if (!valid_classes.count(e.class_label))
                keep[i] = false;
            if (filter && filter->threshold && e.origin == AssetOrigin::Generated && e.clip_score &&
                *e.clip_score < *filter->threshold)
                keep[i] = false;
        }

        if (filter && filter->top_k) {
            std::map<std::string, std::vector<std::size_t>> by_class;
            for (std::size_t i = 0; i < sources.size(); ++i)
                if (keep[i] && sources[i].origin == AssetOrigin::Generated && sources[i].clip_score)
                    by_class[sources[i].class_label].push_back(i);
            for (auto& [cls, idx] : by_class) {
                std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
                    return *sources[a].clip_score > *sources[b].clip_score;
                });
                for (std::size_t r = *filter->top_k; r < idx.size(); ++r)
                    keep[idx[r]] = false;
            }
        }

        TrainingDataset ds;
        ds.validity = std::move(validity);
        for (std::size_t i = 0; i < sources.size(); ++i)
            if (keep[i])
                ds.entries.push_back(std::move(sources[i]));
        if (ds.entries.empty())
            throw DatasetError("dataset is empty after filtering");
        return ds;
    }

    TrainingDataset toy_dataset(const std::vector<std::string>& classes, std::size_t per_class,
                                const std::vector<std::string>& instructions,
                                const std::function<Latent(Rng&)>& sample, Rng& rng) {
        std::vector<DatasetEntry> entries;
        for (const auto& cls : classes) {
            for (std::size_t k = 0; k < per_class; ++k) {
                DatasetEntry e;
                e.latent = sample(rng);
                e.class_label = cls;
                e.instance_id = cls + "-" + std::to_string(k);
                entries.push_back(std::move(e));
            }
        }
        InstructionValidity validity;
        for (const auto& y : instructions)
            validity[y] = std::set<std::string>(classes.begin(), classes.end());
        return build_dataset(std::move(entries), std::move(validity), std::nullopt);
    }

} // namespace latentedit
