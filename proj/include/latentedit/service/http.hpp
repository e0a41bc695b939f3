// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "latentedit/service/session.hpp"

#include <memory>
#include <string>

namespace httplib {
    class Server;
}

namespace latentedit {

    /*
     * /v1 HTTP API over a SessionManager.
     *
     *   POST  /v1/sessions                    {"latent": [[...]]} | {"asset": {"format", "data"}} | {"text_prompt"}
     *   GET   /v1/sessions/{id}
     *   POST  /v1/sessions/{id}/edits         {"instruction", "eta"?}
     *   PATCH /v1/sessions/{id}/edits/{k}     {"eta"}
     *   GET   /v1/sessions/{id}/turntable?frames=&res=&which=head|base   (PNG strip)
     *   GET   /v1/instructions
     *   GET   /v1/healthz
     *
     * Errors are {"error": {"code", "message"}}; unknown instructions answer 422 with
     * the available prompts. Every response carries permissive CORS headers.
     */
    class HttpService {
    public:
        explicit HttpService(SessionManager& sessions);
        ~HttpService();

        /// Binds to an ephemeral port when `port` is 0; returns the bound port.
        int bind(const std::string& host, int port);
        /// Blocks until stop().
        void listen_after_bind();
        void stop();

        httplib::Server& server() { return *server_; }

    private:
        void register_routes();

        SessionManager& sessions_;
        std::unique_ptr<httplib::Server> server_;
    };

} // namespace latentedit
