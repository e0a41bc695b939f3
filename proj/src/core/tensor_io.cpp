// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "latentedit/core/tensor_io.hpp"
#include "latentedit/core/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace latentedit {

    static_assert(std::endian::native == std::endian::little,
                  "tensor container I/O assumes a little-endian host");

    namespace {
        constexpr char kMagic[4] = {'L', 'E', 'T', 'C'};
        constexpr std::uint32_t kVersion = 1;

        template <typename T>
        void put(std::string& out, T value) {
            char buf[sizeof(T)];
            std::memcpy(buf, &value, sizeof(T));
            out.append(buf, sizeof(T));
        }

        class Reader {
        public:
            explicit Reader(std::string_view bytes)
                : bytes_(bytes) {}

            template <typename T>
            T get() {
                T value;
                std::memcpy(&value, take(sizeof(T)).data(), sizeof(T));
                return value;
            }

            std::string_view take(std::size_t n) {
                if (pos_ + n > bytes_.size())
                    throw FormatError("tensor container truncated");
                auto view = bytes_.substr(pos_, n);
                pos_ += n;
                return view;
            }

            bool done() const { return pos_ == bytes_.size(); }

        private:
            std::string_view bytes_;
            std::size_t pos_ = 0;
        };

        std::string read_file(const std::filesystem::path& path) {
            std::ifstream in(path, std::ios::binary);
            if (!in)
                throw FormatError("cannot open '" + path.string() + "'");
            std::ostringstream ss;
            ss << in.rdbuf();
            return ss.str();
        }
    } // namespace

    std::string to_string(DType dtype) { return dtype == DType::F64 ? "float64" : "float32"; }

    std::string serialize_tensors(const TensorMap& tensors, DType dtype) {
        std::string out(kMagic, 4);
        put<std::uint32_t>(out, kVersion);
        put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
        for (const auto& [name, tensor] : tensors) {
            put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
            out += name;
            put<std::uint8_t>(out, static_cast<std::uint8_t>(dtype));
            put<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.ndim()));
            for (auto d : tensor.shape())
                put<std::uint64_t>(out, d);
            if (dtype == DType::F64) {
                out.append(reinterpret_cast<const char*>(tensor.data()), tensor.size() * sizeof(double));
            } else {
                for (double v : tensor.values())
                    put<float>(out, static_cast<float>(v));
            }
        }
        return out;
    }

    TensorMap deserialize_tensors(std::string_view bytes) {
        Reader r(bytes);
        if (r.take(4) != std::string_view(kMagic, 4))
            throw FormatError("not a tensor container (bad magic)");
        if (const auto version = r.get<std::uint32_t>(); version != kVersion)
            throw FormatError("unsupported tensor container version " + std::to_string(version));
        const auto count = r.get<std::uint32_t>();
        TensorMap out;
        for (std::uint32_t i = 0; i < count; ++i) {
            const auto name_len = r.get<std::uint32_t>();
            std::string name(r.take(name_len));
            const auto dtype = r.get<std::uint8_t>();
            if (dtype > 1)
                throw FormatError("unknown dtype tag " + std::to_string(dtype));
            const auto ndim = r.get<std::uint32_t>();
            Shape shape(ndim);
            for (auto& d : shape)
                d = static_cast<std::size_t>(r.get<std::uint64_t>());
            const std::size_t n = shape_numel(shape);
            std::vector<double> values(n);
            if (dtype == static_cast<std::uint8_t>(DType::F64)) {
                auto payload = r.take(n * sizeof(double));
                std::memcpy(values.data(), payload.data(), payload.size());
            } else {
                for (auto& v : values)
                    v = r.get<float>();
            }
            out.emplace(std::move(name), Tensor(std::move(shape), std::move(values)));
        }
        if (!r.done())
            throw FormatError("trailing bytes after tensor container");
        return out;
    }

    void write_tensor_container(const std::filesystem::path& path, const TensorMap& tensors,
                                DType dtype) {
        if (path.has_parent_path())
            std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw FormatError("cannot write '" + path.string() + "'");
        const auto bytes = serialize_tensors(tensors, dtype);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }

    TensorMap read_tensor_container(const std::filesystem::path& path) {
        return deserialize_tensors(read_file(path));
    }

    std::filesystem::path sidecar_path(const std::filesystem::path& path) {
        return std::filesystem::path(path.string() + ".json");
    }

    void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
        if (path.has_parent_path())
            std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::trunc);
        if (!out)
            throw FormatError("cannot write '" + path.string() + "'");
        out << std::setw(2) << j << '\n';
    }

    nlohmann::json read_json(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in)
            throw FormatError("cannot open '" + path.string() + "'");
        try {
            return nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("'" + path.string() + "': " + e.what());
        }
    }

    void save_latent(const std::filesystem::path& path, const Latent& latent, DType dtype) {
        write_tensor_container(path, {{"latent", latent.data}}, dtype);
        write_json(sidecar_path(path), {{"codec_id", latent.codec_id},
                                        {"shape", latent.data.shape()},
                                        {"dtype", to_string(dtype)}});
    }

    Latent load_latent(const std::filesystem::path& path) {
        auto tensors = read_tensor_container(path);
        auto it = tensors.find("latent");
        if (it == tensors.end())
            throw FormatError("'" + path.string() + "' has no 'latent' entry");
        Latent latent{std::move(it->second), {}};
        const auto meta_path = sidecar_path(path);
        if (std::filesystem::exists(meta_path)) {
            const auto meta = read_json(meta_path);
            latent.codec_id = meta.value("codec_id", "");
            if (meta.contains("shape") && meta["shape"].get<Shape>() != latent.data.shape())
                throw FormatError("sidecar shape disagrees with '" + path.string() + "'");
        }
        return latent;
    }

} // namespace latentedit
