// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace latentedit {

    /// Base of every error raised by the library. The service layer maps the
    /// concrete subclasses onto HTTP status codes.
    class Error : public std::runtime_error {
    public:
        using std::runtime_error::runtime_error;
    };

    class ShapeError : public Error {
        using Error::Error;
    };

    class IndexError : public Error {
        using Error::Error;
    };

    /// Malformed or precondition-violating input (empty geometry, bad mask range, ...).
    class InputError : public Error {
        using Error::Error;
    };

    /// A model backend (codec, prior, embedder) is missing or failed.
    class BackendError : public Error {
        using Error::Error;
    };

    /// A prior was asked for a conditioning signal it does not support.
    class CapabilityError : public Error {
        using Error::Error;
    };

    class TokenError : public Error {
        using Error::Error;
    };

    /// Unknown, untrained or incomplete edit instruction.
    class InstructionError : public Error {
        using Error::Error;
    };

    class DatasetError : public Error {
        using Error::Error;
    };

    class InitError : public Error {
        using Error::Error;
    };

    class ConfigError : public Error {
        using Error::Error;
    };

    class FormatError : public Error {
        using Error::Error;
    };

    class NotFoundError : public Error {
        using Error::Error;
    };

    /// Training produced non-finite losses. Carries a JSON diagnostic snapshot.
    class DivergenceError : public Error {
    public:
        DivergenceError(const std::string& what, std::string snapshot)
            : Error(what),
              snapshot_(std::move(snapshot)) {}

        const std::string& snapshot() const { return snapshot_; }

    private:
        std::string snapshot_;
    };

} // namespace latentedit
