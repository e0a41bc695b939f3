// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "latentedit/service/http.hpp"
#include "latentedit/codec/geometry_io.hpp"
#include "latentedit/codec/image_io.hpp"
#include "latentedit/core/error.hpp"

#include <httplib.h>

#include <chrono>

namespace latentedit {

    using nlohmann::json;

    namespace {

        void send_json(httplib::Response& res, int status, const json& body) {
            res.status = status;
            res.set_content(body.dump(), "application/json");
        }

        void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message,
                        json extra = json::object()) {
            json err{{"code", code}, {"message", message}};
            err.update(extra);
            send_json(res, status, json{{"error", err}});
        }

        json instruction_catalog(const SessionManager& sessions) {
            json out = json::array();
            for (const auto& info : sessions.list_instructions())
                out.push_back({{"text", info.text}, {"kind", to_string(info.kind)}});
            return out;
        }

        // Runs a handler and maps library errors onto HTTP statuses.
        template <typename F>
        void guarded(const SessionManager& sessions, httplib::Response& res, F&& f) {
            try {
                f();
            } catch (const InstructionError& e) {
                json available = json::array();
                for (const auto& info : sessions.list_instructions())
                    available.push_back(info.text);
                send_error(res, 422, "unknown_instruction", e.what(), {{"available", available}});
            } catch (const NotFoundError& e) {
                send_error(res, 404, "not_found", e.what());
            } catch (const IndexError& e) {
                send_error(res, 404, "not_found", e.what());
            } catch (const CapabilityError& e) {
                send_error(res, 501, "unsupported", e.what());
            } catch (const BackendError& e) {
                send_error(res, 502, "backend_error", e.what());
            } catch (const json::exception& e) {
                send_error(res, 400, "bad_request", e.what());
            } catch (const InputError& e) {
                send_error(res, 400, "bad_request", e.what());
            } catch (const ShapeError& e) {
                send_error(res, 400, "bad_request", e.what());
            } catch (const FormatError& e) {
                send_error(res, 400, "bad_request", e.what());
            } catch (const std::exception& e) {
                send_error(res, 500, "internal", e.what());
            }
        }

        json parse_body(const httplib::Request& req) {
            if (req.body.empty())
                throw InputError("request body is empty");
            try {
                return json::parse(req.body);
            } catch (const json::parse_error& e) {
                throw InputError(std::string("request body is not valid JSON: ") + e.what());
            }
        }

        Latent latent_from_json(const json& rows) {
            if (!rows.is_array() || rows.empty() || !rows[0].is_array() || rows[0].empty())
                throw InputError("latent must be a non-empty array of rows");
            const std::size_t d = rows.size(), c = rows[0].size();
            Tensor t({d, c});
            for (std::size_t i = 0; i < d; ++i) {
                if (!rows[i].is_array() || rows[i].size() != c)
                    throw InputError("latent rows must all have " + std::to_string(c) + " entries");
                for (std::size_t j = 0; j < c; ++j) {
                    if (!rows[i][j].is_number())
                        throw InputError("latent entries must be numbers");
                    t.at(i, j) = rows[i][j].get<double>();
                }
            }
            return {std::move(t), {}};
        }

        int int_param(const httplib::Request& req, const char* name, int fallback) {
            if (!req.has_param(name))
                return fallback;
            const std::string v = req.get_param_value(name);
            try {
                std::size_t used = 0;
                const int out = std::stoi(v, &used);
                if (used != v.size())
                    throw InputError("");
                return out;
            } catch (const std::exception&) {
                throw InputError(std::string("query parameter '") + name + "' must be an integer");
            }
        }

        json session_json(const EditSession& s) {
            json j = s;
            j["turntable_url"] = "/v1/sessions/" + s.session_id + "/turntable";
            return j;
        }

    } // namespace

    HttpService::HttpService(SessionManager& sessions)
        : sessions_(sessions), server_(std::make_unique<httplib::Server>()) {
        server_->set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                      {"Access-Control-Allow-Methods", "GET, POST, PATCH, OPTIONS"},
                                      {"Access-Control-Allow-Headers", "Content-Type"},
                                      {"Access-Control-Expose-Headers", "X-Frame-Count, X-Frame-Width"}});
        register_routes();
    }

    HttpService::~HttpService() { stop(); }

    int HttpService::bind(const std::string& host, int port) {
        if (port == 0) {
            const int bound = server_->bind_to_any_port(host);
            if (bound < 0)
                throw BackendError("cannot bind " + host);
            return bound;
        }
        if (!server_->bind_to_port(host, port))
            throw BackendError("cannot bind " + host + ":" + std::to_string(port));
        return port;
    }

    void HttpService::listen_after_bind() { server_->listen_after_bind(); }

    void HttpService::stop() {
        if (server_)
            server_->stop();
    }

    void HttpService::register_routes() {
        auto& svr = *server_;
        SessionManager& sm = sessions_;

        svr.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

        svr.Get("/v1/healthz", [](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, json{{"status", "ok"}});
        });

        svr.Get("/v1/instructions", [&sm](const httplib::Request&, httplib::Response& res) {
            guarded(sm, res, [&] { send_json(res, 200, json{{"instructions", instruction_catalog(sm)}}); });
        });

        svr.Post("/v1/sessions", [&sm](const httplib::Request& req, httplib::Response& res) {
            guarded(sm, res, [&] {
                const json body = parse_body(req);
                if (!body.is_object())
                    throw InputError("request body must be a JSON object");
                SessionSource src;
                if (body.contains("latent"))
                    src.latent = latent_from_json(body["latent"]);
                if (body.contains("asset")) {
                    const json& a = body["asset"];
                    src.asset = parse_asset(a.at("data").get<std::string>(), a.at("format").get<std::string>(),
                                            a.value("class_label", ""));
                }
                if (body.contains("text_prompt"))
                    src.text_prompt = body["text_prompt"].get<std::string>();
                send_json(res, 201, session_json(sm.create(src)));
            });
        });

        svr.Get(R"(/v1/sessions/([^/]+))", [&sm](const httplib::Request& req, httplib::Response& res) {
            guarded(sm, res, [&] { send_json(res, 200, session_json(sm.get(req.matches[1]))); });
        });

        svr.Post(R"(/v1/sessions/([^/]+)/edits)", [&sm](const httplib::Request& req, httplib::Response& res) {
            guarded(sm, res, [&] {
                const json body = parse_body(req);
                const auto start = std::chrono::steady_clock::now();
                const ApplyResult r = sm.apply_edit(req.matches[1], body.at("instruction").get<std::string>(),
                                                    body.value("eta", 1.0), false);
                const double ms =
                    std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
                json out = session_json(r.session);
                out["latency_ms"] = ms;
                send_json(res, 201, out);
            });
        });

        svr.Patch(R"(/v1/sessions/([^/]+)/edits/(\d+))", [&sm](const httplib::Request& req, httplib::Response& res) {
            guarded(sm, res, [&] {
                const json body = parse_body(req);
                const std::size_t k = std::stoul(req.matches[2]);
                send_json(res, 200, session_json(sm.set_strength(req.matches[1], k, body.at("eta").get<double>())));
            });
        });

        svr.Get(R"(/v1/sessions/([^/]+)/turntable)", [&sm](const httplib::Request& req, httplib::Response& res) {
            guarded(sm, res, [&] {
                const int frames = int_param(req, "frames", sm.config().turntable_frames);
                const int resolution = int_param(req, "res", sm.config().turntable_resolution);
                const std::string which = req.has_param("which") ? req.get_param_value("which") : "head";
                if (which != "head" && which != "base")
                    throw InputError("'which' must be 'head' or 'base'");
                const auto views = sm.turntable(req.matches[1], frames, resolution, which == "base");
                res.set_header("X-Frame-Count", std::to_string(views.size()));
                res.set_header("X-Frame-Width", std::to_string(resolution));
                res.set_content(encode_png_rgb(hstack_frames(views)), "image/png");
            });
        });
    }

} // namespace latentedit
