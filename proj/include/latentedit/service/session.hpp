// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "latentedit/codec/codec.hpp"
#include "latentedit/editor/editor.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

struct sqlite3;

namespace latentedit {

    /// Key-value store over a single sqlite table.
    class KeyValueStore {
    public:
        explicit KeyValueStore(const std::filesystem::path& db_path);
        ~KeyValueStore();
        KeyValueStore(const KeyValueStore&) = delete;
        KeyValueStore& operator=(const KeyValueStore&) = delete;

        void put(const std::string& key, const std::string& value);
        std::optional<std::string> get(const std::string& key) const;
        std::vector<std::string> keys() const;

    private:
        sqlite3* db_ = nullptr;
        mutable std::mutex mu_;
    };

    struct ServiceConfig {
        std::filesystem::path data_dir;
        /// Edit i of a session uses inference_seed + i.
        std::uint64_t inference_seed = 0;
        int turntable_frames = 12;
        int turntable_resolution = 256;
        CameraConfig camera;
    };

    void to_json(nlohmann::json& j, const ServiceConfig& c);
    void from_json(const nlohmann::json& j, ServiceConfig& c);

    /// Samples a source latent from a text prompt.
    using TextToLatent = std::function<Latent(const std::string& prompt)>;

    /// Exactly one of the fields must be set.
    struct SessionSource {
        std::optional<Latent> latent;
        std::optional<AssetSource> asset;
        std::optional<std::string> text_prompt;
    };

    struct EditEntry {
        std::string instruction;
        double eta = 1.0;
        /// Files (relative to the session directory) of the raw editor output and the scaled result.
        std::string editor_output_ref;
        std::string latent_ref;
    };

    struct EditSession {
        std::string session_id;
        std::string source_kind;
        std::string base_ref;
        std::vector<EditEntry> edits;
        std::string created_at;
        std::string updated_at;
    };

    void to_json(nlohmann::json& j, const EditEntry& e);
    void from_json(const nlohmann::json& j, EditEntry& e);
    void to_json(nlohmann::json& j, const EditSession& s);
    void from_json(const nlohmann::json& j, EditSession& s);

    struct InstructionInfo {
        std::string text;
        EditKind kind = EditKind::Global;
    };

    struct ApplyResult {
        EditSession session;
        /// Turntable of the new head; empty when rendering was not requested.
        std::vector<Tensor> turntable;
    };

    /*
     * Editing sessions over one shared read-only editor and codec. Session documents
     * live in <data_dir>/sessions.db, latents under <data_dir>/sessions/<id>/.
     * Mutations of one session are serialized; different sessions proceed in parallel.
     */
    class SessionManager {
    public:
        SessionManager(const Editor& editor, const Codec& codec, ServiceConfig config,
                       TextToLatent text_to_latent = {});

        const ServiceConfig& config() const { return config_; }

        EditSession create(const SessionSource& source);
        EditSession get(const std::string& session_id) const;
        std::vector<std::string> list() const;

        /// Pushes scale_edit(head, edit(head, y), eta). One editor forward pass.
        ApplyResult apply_edit(const std::string& session_id, const std::string& instruction, double eta = 1.0,
                               bool render_turntable = true);

        /// Re-scales entry `index` from its cached editor output and replays later entries.
        EditSession set_strength(const std::string& session_id, std::size_t index, double eta);

        Latent base_latent(const std::string& session_id) const;
        Latent head_latent(const std::string& session_id) const;

        /// Recomputes the head from the base latent and the stored stack.
        Latent replay(const std::string& session_id) const;

        /// `frames` equally spaced azimuths of the head (or base) latent.
        std::vector<Tensor> turntable(const std::string& session_id, int frames, int resolution,
                                      bool base = false) const;

        std::vector<InstructionInfo> list_instructions() const;

    private:
        std::filesystem::path session_dir(const std::string& id) const;
        EditSession load(const std::string& id) const;
        void store(const EditSession& s);
        Latent read(const std::string& id, const std::string& ref) const;
        void write(const std::string& id, const std::string& ref, const Latent& latent) const;
        std::shared_ptr<std::mutex> lock_for(const std::string& id) const;
        std::vector<Tensor> render_turntable(const Latent& latent, int frames, int resolution) const;
        std::uint64_t seed_for(std::size_t index) const { return config_.inference_seed + index; }

        const Editor& editor_;
        const Codec& codec_;
        ServiceConfig config_;
        TextToLatent text_to_latent_;
        std::unique_ptr<KeyValueStore> store_;
        mutable std::mutex locks_mu_;
        mutable std::map<std::string, std::shared_ptr<std::mutex>> locks_;
    };

} // namespace latentedit
