// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "latentedit/service/session.hpp"
#include "latentedit/core/config.hpp"
#include "latentedit/core/error.hpp"
#include "latentedit/core/tensor_io.hpp"
#include "latentedit/latent_ops/latent_ops.hpp"

#include <sqlite3.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <random>

namespace latentedit {

    using nlohmann::json;

    namespace {

        std::string now_utc() {
            const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
            std::tm tm{};
            gmtime_r(&t, &tm);
            char buf[32];
            std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
            return buf;
        }

        std::string new_session_id() {
            static std::mutex mu;
            static std::mt19937_64 gen{std::random_device{}()};
            std::lock_guard lock(mu);
            char buf[17];
            std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(gen()));
            return buf;
        }

        bool valid_session_id(const std::string& id) {
            if (id.empty() || id.size() > 64)
                return false;
            for (char c : id)
                if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_')
                    return false;
            return true;
        }

        std::string entry_ref(std::size_t k, const char* suffix) {
            char buf[48];
            std::snprintf(buf, sizeof buf, "edit_%03zu%s.letc", k, suffix);
            return buf;
        }

        void check_eta(double eta) {
            if (!std::isfinite(eta))
                throw InputError("edit strength must be finite");
        }

    } // namespace

    KeyValueStore::KeyValueStore(const std::filesystem::path& db_path) {
        const int rc = sqlite3_open_v2(db_path.c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE |
                                                                   SQLITE_OPEN_FULLMUTEX, nullptr);
        if (rc != SQLITE_OK) {
            const std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
            sqlite3_close(db_);
            throw BackendError("cannot open session store '" + db_path.string() + "': " + msg);
        }
        char* err = nullptr;
        if (sqlite3_exec(db_, "CREATE TABLE IF NOT EXISTS kv (key TEXT PRIMARY KEY, value TEXT NOT NULL)", nullptr,
                         nullptr, &err) != SQLITE_OK) {
            const std::string msg = err ? err : "unknown error";
            sqlite3_free(err);
            sqlite3_close(db_);
            throw BackendError("cannot initialize session store: " + msg);
        }
    }

    KeyValueStore::~KeyValueStore() { sqlite3_close(db_); }

    void KeyValueStore::put(const std::string& key, const std::string& value) {
        std::lock_guard lock(mu_);
        sqlite3_stmt* stmt = nullptr;
        sqlite3_prepare_v2(db_, "INSERT OR REPLACE INTO kv (key, value) VALUES (?, ?)", -1, &stmt, nullptr);
        sqlite3_bind_text(stmt, 1, key.c_str(), static_cast<int>(key.size()), SQLITE_TRANSIENT);
        sqlite3_bind_text(stmt, 2, value.c_str(), static_cast<int>(value.size()), SQLITE_TRANSIENT);
        const int rc = sqlite3_step(stmt);
        sqlite3_finalize(stmt);
        if (rc != SQLITE_DONE)
            throw BackendError(std::string("session store write failed: ") + sqlite3_errmsg(db_));
    }

    std::optional<std::string> KeyValueStore::get(const std::string& key) const {
        std::lock_guard lock(mu_);
        sqlite3_stmt* stmt = nullptr;
        sqlite3_prepare_v2(db_, "SELECT value FROM kv WHERE key = ?", -1, &stmt, nullptr);
        sqlite3_bind_text(stmt, 1, key.c_str(), static_cast<int>(key.size()), SQLITE_TRANSIENT);
        std::optional<std::string> out;
        if (sqlite3_step(stmt) == SQLITE_ROW)
            out = reinterpret_cast<const char*>(sqlite3_column_text(stmt, 0));
        sqlite3_finalize(stmt);
        return out;
    }

    std::vector<std::string> KeyValueStore::keys() const {
        std::lock_guard lock(mu_);
        sqlite3_stmt* stmt = nullptr;
        sqlite3_prepare_v2(db_, "SELECT key FROM kv ORDER BY key", -1, &stmt, nullptr);
        std::vector<std::string> out;
        while (sqlite3_step(stmt) == SQLITE_ROW)
            out.emplace_back(reinterpret_cast<const char*>(sqlite3_column_text(stmt, 0)));
        sqlite3_finalize(stmt);
        return out;
    }

    void to_json(json& j, const ServiceConfig& c) {
        j = json{{"data_dir", c.data_dir.string()},
                 {"inference_seed", c.inference_seed},
                 {"turntable_frames", c.turntable_frames},
                 {"turntable_resolution", c.turntable_resolution},
                 {"camera", c.camera}};
    }

    void from_json(const json& j, ServiceConfig& c) {
        c.data_dir = j.value("data_dir", c.data_dir.string());
        c.inference_seed = j.value("inference_seed", c.inference_seed);
        c.turntable_frames = j.value("turntable_frames", c.turntable_frames);
        c.turntable_resolution = j.value("turntable_resolution", c.turntable_resolution);
        if (j.contains("camera"))
            c.camera = j["camera"].get<CameraConfig>();
    }

    void to_json(json& j, const EditEntry& e) {
        j = json{{"instruction", e.instruction},
                 {"eta", e.eta},
                 {"editor_output", e.editor_output_ref},
                 {"latent", e.latent_ref}};
    }

    void from_json(const json& j, EditEntry& e) {
        e.instruction = j.at("instruction").get<std::string>();
        e.eta = j.at("eta").get<double>();
        e.editor_output_ref = j.at("editor_output").get<std::string>();
        e.latent_ref = j.at("latent").get<std::string>();
    }

    void to_json(json& j, const EditSession& s) {
        j = json{{"session_id", s.session_id},
                 {"source_kind", s.source_kind},
                 {"base", s.base_ref},
                 {"edits", s.edits},
                 {"created_at", s.created_at},
                 {"updated_at", s.updated_at}};
    }

    void from_json(const json& j, EditSession& s) {
        s.session_id = j.at("session_id").get<std::string>();
        s.source_kind = j.value("source_kind", "");
        s.base_ref = j.at("base").get<std::string>();
        s.edits = j.at("edits").get<std::vector<EditEntry>>();
        s.created_at = j.value("created_at", "");
        s.updated_at = j.value("updated_at", "");
    }

    SessionManager::SessionManager(const Editor& editor, const Codec& codec, ServiceConfig config,
                                   TextToLatent text_to_latent)
        : editor_(editor), codec_(codec), config_(std::move(config)), text_to_latent_(std::move(text_to_latent)) {
        if (config_.data_dir.empty())
            throw ConfigError("service data_dir is not set");
        if (config_.turntable_frames < 1 || config_.turntable_resolution < 1)
            throw ConfigError("turntable frames and resolution must be positive");
        config_.camera.validate();
        if (editor_.params().latent_shape != codec_.latent_shape())
            throw ConfigError("editor latent shape does not match the codec");
        std::filesystem::create_directories(config_.data_dir / "sessions");
        store_ = std::make_unique<KeyValueStore>(config_.data_dir / "sessions.db");
    }

    std::filesystem::path SessionManager::session_dir(const std::string& id) const {
        return config_.data_dir / "sessions" / id;
    }

    EditSession SessionManager::load(const std::string& id) const {
        if (!valid_session_id(id))
            throw NotFoundError("unknown session '" + id + "'");
        const auto doc = store_->get(id);
        if (!doc)
            throw NotFoundError("unknown session '" + id + "'");
        try {
            return json::parse(*doc).get<EditSession>();
        } catch (const json::exception& e) {
            throw FormatError("corrupt session record '" + id + "': " + e.what());
        }
    }

    void SessionManager::store(const EditSession& s) { store_->put(s.session_id, json(s).dump()); }

    Latent SessionManager::read(const std::string& id, const std::string& ref) const {
        return load_latent(session_dir(id) / ref);
    }

    void SessionManager::write(const std::string& id, const std::string& ref, const Latent& latent) const {
        save_latent(session_dir(id) / ref, latent);
    }

    std::shared_ptr<std::mutex> SessionManager::lock_for(const std::string& id) const {
        if (!valid_session_id(id))
            throw NotFoundError("unknown session '" + id + "'");
        std::lock_guard lock(locks_mu_);
        auto& m = locks_[id];
        if (!m)
            m = std::make_shared<std::mutex>();
        return m;
    }

    EditSession SessionManager::create(const SessionSource& source) {
        const int given = source.latent.has_value() + source.asset.has_value() + source.text_prompt.has_value();
        if (given != 1)
            throw InputError("exactly one of latent, asset or text prompt must be given");

        EditSession s;
        Latent base;
        if (source.latent) {
            base = *source.latent;
            base.validate(codec_.latent_shape());
            base.codec_id = codec_.id();
            s.source_kind = "latent";
        } else if (source.asset) {
            source.asset->validate();
            base = codec_.encode(*source.asset);
            s.source_kind = "asset";
        } else {
            if (source.text_prompt->empty())
                throw InputError("text prompt is empty");
            if (!text_to_latent_)
                throw CapabilityError("this deployment cannot sample latents from text");
            base = text_to_latent_(*source.text_prompt);
            base.validate(codec_.latent_shape());
            s.source_kind = "text";
        }

        do {
            s.session_id = new_session_id();
        } while (store_->get(s.session_id));
        s.base_ref = "base.letc";
        s.created_at = s.updated_at = now_utc();
        std::filesystem::create_directories(session_dir(s.session_id));
        write(s.session_id, s.base_ref, base);
        store(s);
        return s;
    }

    EditSession SessionManager::get(const std::string& session_id) const { return load(session_id); }

    std::vector<std::string> SessionManager::list() const { return store_->keys(); }

    ApplyResult SessionManager::apply_edit(const std::string& session_id, const std::string& instruction, double eta,
                                           bool render_turntable) {
        check_eta(eta);
        editor_.params().instruction_index(instruction);
        auto mu = lock_for(session_id);
        std::lock_guard lock(*mu);

        EditSession s = load(session_id);
        const Latent head = s.edits.empty() ? read(session_id, s.base_ref) : read(session_id, s.edits.back().latent_ref);
        const std::size_t k = s.edits.size();
        const Latent out = editor_.edit(head, instruction, seed_for(k));
        const Latent next = scale_edit(head, out, eta);

        EditEntry e{instruction, eta, entry_ref(k, "_out"), entry_ref(k, "")};
        write(session_id, e.editor_output_ref, out);
        write(session_id, e.latent_ref, next);
        s.edits.push_back(std::move(e));
        s.updated_at = now_utc();
        store(s);

        ApplyResult result{std::move(s), {}};
        if (render_turntable)
            result.turntable = this->render_turntable(next, config_.turntable_frames, config_.turntable_resolution);
        return result;
    }

    EditSession SessionManager::set_strength(const std::string& session_id, std::size_t index, double eta) {
        check_eta(eta);
        auto mu = lock_for(session_id);
        std::lock_guard lock(*mu);

        EditSession s = load(session_id);
        if (index >= s.edits.size())
            throw IndexError("edit index " + std::to_string(index) + " out of range (session has " +
                             std::to_string(s.edits.size()) + " edits)");
        if (s.edits[index].eta == eta)
            return s;

        Latent prev = index == 0 ? read(session_id, s.base_ref) : read(session_id, s.edits[index - 1].latent_ref);
        prev = scale_edit(prev, read(session_id, s.edits[index].editor_output_ref), eta);
        s.edits[index].eta = eta;
        write(session_id, s.edits[index].latent_ref, prev);
        for (std::size_t j = index + 1; j < s.edits.size(); ++j) {
            const Latent out = editor_.edit(prev, s.edits[j].instruction, seed_for(j));
            prev = scale_edit(prev, out, s.edits[j].eta);
            write(session_id, s.edits[j].editor_output_ref, out);
            write(session_id, s.edits[j].latent_ref, prev);
        }
        s.updated_at = now_utc();
        store(s);
        return s;
    }

    Latent SessionManager::base_latent(const std::string& session_id) const {
        auto mu = lock_for(session_id);
        std::lock_guard lock(*mu);
        return read(session_id, load(session_id).base_ref);
    }

    Latent SessionManager::head_latent(const std::string& session_id) const {
        auto mu = lock_for(session_id);
        std::lock_guard lock(*mu);
        const EditSession s = load(session_id);
        return read(session_id, s.edits.empty() ? s.base_ref : s.edits.back().latent_ref);
    }

    Latent SessionManager::replay(const std::string& session_id) const {
        auto mu = lock_for(session_id);
        std::lock_guard lock(*mu);
        const EditSession s = load(session_id);
        Latent head = read(session_id, s.base_ref);
        for (std::size_t j = 0; j < s.edits.size(); ++j)
            head = scale_edit(head, editor_.edit(head, s.edits[j].instruction, seed_for(j)), s.edits[j].eta);
        return head;
    }

    std::vector<Tensor> SessionManager::render_turntable(const Latent& latent, int frames, int resolution) const {
        if (frames < 1 || frames > 360)
            throw InputError("turntable frames must be in [1, 360]");
        if (resolution < 1 || resolution > 2048)
            throw InputError("turntable resolution must be in [1, 2048]");
        CameraConfig cam = config_.camera;
        cam.azimuth_range_deg = {-180.0, 180.0};
        const FieldModel field = codec_.decode(latent);
        std::vector<Tensor> out;
        for (const auto& vp : uniform_viewpoints(cam, frames))
            out.push_back(codec_.render(field, vp, resolution).rgb);
        return out;
    }

    std::vector<Tensor> SessionManager::turntable(const std::string& session_id, int frames, int resolution,
                                                  bool base) const {
        return render_turntable(base ? base_latent(session_id) : head_latent(session_id), frames, resolution);
    }

    std::vector<InstructionInfo> SessionManager::list_instructions() const {
        const EditorParams& p = editor_.params();
        if (p.instructions.empty())
            throw ConfigError("loaded editor has no instructions");
        std::vector<InstructionInfo> out;
        for (std::size_t k = 0; k < p.instructions.size(); ++k)
            out.push_back({p.instructions[k], p.instruction_kind(k)});
        return out;
    }

} // namespace latentedit
