// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "latentedit/codec/geometry_io.hpp"
#include "latentedit/core/error.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace latentedit {

    namespace {
        struct PlyProperty {
            std::string name;
            std::string type;
        };

        std::size_t type_size(const std::string& type) {
            if (type == "char" || type == "uchar" || type == "int8" || type == "uint8")
                return 1;
            if (type == "short" || type == "ushort" || type == "int16" || type == "uint16")
                return 2;
            if (type == "int" || type == "uint" || type == "float" || type == "int32" || type == "uint32" ||
                type == "float32")
                return 4;
            if (type == "double" || type == "float64")
                return 8;
            throw FormatError("unsupported PLY property type '" + type + "'");
        }

        bool is_byte_type(const std::string& type) { return type == "uchar" || type == "uint8"; }

        double read_binary(const char* p, const std::string& type) {
            auto load = [p]<typename T>(T) {
                T v;
                std::memcpy(&v, p, sizeof(T));
                return static_cast<double>(v);
            };
            if (type == "char" || type == "int8") return load(std::int8_t{});
            if (type == "uchar" || type == "uint8") return load(std::uint8_t{});
            if (type == "short" || type == "int16") return load(std::int16_t{});
            if (type == "ushort" || type == "uint16") return load(std::uint16_t{});
            if (type == "int" || type == "int32") return load(std::int32_t{});
            if (type == "uint" || type == "uint32") return load(std::uint32_t{});
            if (type == "float" || type == "float32") return load(float{});
            return load(double{});
        }

        // Splits "code_3" into ("code", 3); returns false when there is no numeric suffix.
        bool split_indexed(const std::string& name, std::string& base, std::size_t& index) {
            const auto pos = name.rfind('_');
            if (pos == std::string::npos || pos + 1 >= name.size())
                return false;
            const char* first = name.data() + pos + 1;
            const char* last = name.data() + name.size();
            auto [ptr, ec] = std::from_chars(first, last, index);
            if (ec != std::errc() || ptr != last)
                return false;
            base = name.substr(0, pos);
            return true;
        }

        PointCloud assemble(const std::vector<PlyProperty>& props, std::size_t count,
                            const std::vector<double>& values) {
            const std::size_t stride = props.size();
            int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
            for (std::size_t p = 0; p < stride; ++p) {
                const auto& n = props[p].name;
                if (n == "x") ix = static_cast<int>(p);
                else if (n == "y") iy = static_cast<int>(p);
                else if (n == "z") iz = static_cast<int>(p);
                else if (n == "red" || n == "r") ir = static_cast<int>(p);
                else if (n == "green" || n == "g") ig = static_cast<int>(p);
                else if (n == "blue" || n == "b") ib = static_cast<int>(p);
            }
            if (ix < 0 || iy < 0 || iz < 0)
                throw FormatError("PLY vertex element lacks x/y/z");

            PointCloud cloud;
            cloud.xyz_rgb = Tensor({count, 6});
            const auto color = [&](int idx, std::size_t row) {
                if (idx < 0)
                    return 1.0;
                const double v = values[row * stride + idx];
                return is_byte_type(props[idx].type) ? v / 255.0 : v;
            };
            for (std::size_t r = 0; r < count; ++r) {
                cloud.xyz_rgb.at(r, 0) = values[r * stride + ix];
                cloud.xyz_rgb.at(r, 1) = values[r * stride + iy];
                cloud.xyz_rgb.at(r, 2) = values[r * stride + iz];
                cloud.xyz_rgb.at(r, 3) = color(ir, r);
                cloud.xyz_rgb.at(r, 4) = color(ig, r);
                cloud.xyz_rgb.at(r, 5) = color(ib, r);
            }

            std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> grouped;
            for (std::size_t p = 0; p < stride; ++p) {
                const int ip = static_cast<int>(p);
                if (ip == ix || ip == iy || ip == iz || ip == ir || ip == ig || ip == ib)
                    continue;
                std::string base;
                std::size_t index = 0;
                if (!split_indexed(props[p].name, base, index)) {
                    base = props[p].name;
                    index = 0;
                }
                grouped[base].emplace_back(index, p);
            }
            for (auto& [base, columns] : grouped) {
                std::sort(columns.begin(), columns.end());
                Tensor attr({count, columns.size()});
                for (std::size_t r = 0; r < count; ++r)
                    for (std::size_t c = 0; c < columns.size(); ++c)
                        attr.at(r, c) = values[r * stride + columns[c].second];
                cloud.attributes.emplace(base, std::move(attr));
            }
            return cloud;
        }
    } // namespace

    PointCloud parse_ply(std::string_view bytes) {
        const auto header_end = bytes.find("end_header");
        if (bytes.substr(0, 3) != "ply" || header_end == std::string_view::npos)
            throw FormatError("not a PLY stream");
        std::istringstream header(std::string(bytes.substr(0, header_end)));
        std::string line, format;
        std::size_t vertex_count = 0;
        bool in_vertex = false, vertex_seen = false;
        std::size_t elements_before_vertex = 0;
        std::vector<PlyProperty> props;
        while (std::getline(header, line)) {
            std::istringstream ls(line);
            std::string word;
            ls >> word;
            if (word == "format") {
                ls >> format;
            } else if (word == "element") {
                std::string name;
                std::size_t n = 0;
                ls >> name >> n;
                in_vertex = name == "vertex";
                if (in_vertex) {
                    vertex_count = n;
                    vertex_seen = true;
                } else if (!vertex_seen) {
                    ++elements_before_vertex;
                }
            } else if (word == "property" && in_vertex) {
                std::string type, name;
                ls >> type;
                if (type == "list")
                    throw FormatError("list properties on PLY vertices are not supported");
                ls >> name;
                props.push_back({name, type});
            }
        }
        if (!vertex_seen)
            throw FormatError("PLY has no vertex element");
        if (elements_before_vertex > 0)
            throw FormatError("PLY vertex element must come first");

        std::size_t body = header_end + std::strlen("end_header");
        if (body < bytes.size() && bytes[body] == '\r')
            ++body;
        if (body < bytes.size() && bytes[body] == '\n')
            ++body;

        std::vector<double> values(vertex_count * props.size());
        if (format == "ascii") {
            std::istringstream in(std::string(bytes.substr(body)));
            for (auto& v : values) {
                if (!(in >> v))
                    throw FormatError("PLY body truncated");
            }
        } else if (format == "binary_little_endian") {
            std::size_t pos = body;
            for (std::size_t r = 0; r < vertex_count; ++r) {
                for (std::size_t p = 0; p < props.size(); ++p) {
                    const std::size_t sz = type_size(props[p].type);
                    if (pos + sz > bytes.size())
                        throw FormatError("PLY body truncated");
                    values[r * props.size() + p] = read_binary(bytes.data() + pos, props[p].type);
                    pos += sz;
                }
            }
        } else {
            throw FormatError("unsupported PLY format '" + format + "'");
        }
        return assemble(props, vertex_count, values);
    }

    PointCloud parse_obj(std::string_view text) {
        std::istringstream in{std::string(text)};
        std::string line;
        std::vector<double> rows;
        while (std::getline(in, line)) {
            if (line.size() < 2 || line[0] != 'v' || (line[1] != ' ' && line[1] != '\t'))
                continue;
            std::istringstream ls(line.substr(2));
            double v[6] = {0, 0, 0, 1, 1, 1};
            if (!(ls >> v[0] >> v[1] >> v[2]))
                throw FormatError("malformed OBJ vertex: " + line);
            double r, g, b;
            if (ls >> r >> g >> b) {
                v[3] = r;
                v[4] = g;
                v[5] = b;
            }
            rows.insert(rows.end(), v, v + 6);
        }
        PointCloud cloud;
        const std::size_t n = rows.size() / 6;
        cloud.xyz_rgb = Tensor({n, 6}, std::move(rows));
        return cloud;
    }

    AssetSource parse_asset(std::string_view bytes, const std::string& format, std::string class_label,
                            std::string instance_id) {
        AssetSource asset;
        if (format == "ply")
            asset.points = parse_ply(bytes);
        else if (format == "obj")
            asset.points = parse_obj(bytes);
        else
            throw FormatError("unsupported asset format '" + format + "'");
        asset.class_label = std::move(class_label);
        asset.instance_id = std::move(instance_id);
        asset.validate();
        return asset;
    }

    AssetSource load_asset(const std::filesystem::path& path, std::string class_label, std::string instance_id) {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw FormatError("cannot open '" + path.string() + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        std::string ext = path.extension().string();
        for (auto& ch : ext)
            ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        if (instance_id.empty())
            instance_id = path.stem().string();
        return parse_asset(ss.str(), ext.empty() ? "" : ext.substr(1), std::move(class_label),
                           std::move(instance_id));
    }

    std::string write_ply(const PointCloud& cloud) {
        std::ostringstream os;
        os << std::setprecision(17);
        const std::size_t n = cloud.size();
        os << "ply\nformat ascii 1.0\nelement vertex " << n << '\n';
        os << "property double x\nproperty double y\nproperty double z\n";
        os << "property double red\nproperty double green\nproperty double blue\n";
        for (const auto& [name, attr] : cloud.attributes) {
            const std::size_t cols = attr.ndim() > 1 ? attr.dim(1) : 1;
            for (std::size_t c = 0; c < cols; ++c)
                os << "property double " << name << '_' << c << '\n';
        }
        os << "end_header\n";
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < 6; ++c)
                os << (c ? " " : "") << cloud.xyz_rgb.at(r, c);
            for (const auto& [name, attr] : cloud.attributes) {
                const std::size_t cols = attr.ndim() > 1 ? attr.dim(1) : 1;
                for (std::size_t c = 0; c < cols; ++c)
                    os << ' ' << attr[r * cols + c];
            }
            os << '\n';
        }
        return os.str();
    }

} // namespace latentedit
