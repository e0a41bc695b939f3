// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "latentedit/codec/image_io.hpp"
#include "latentedit/core/error.hpp"

#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace latentedit {

    namespace {
        struct ReadCursor {
            std::string_view bytes;
            std::size_t pos = 0;
        };

        void write_to_string(png_structp png, png_bytep data, png_size_t length) {
            auto* out = static_cast<std::string*>(png_get_io_ptr(png));
            out->append(reinterpret_cast<const char*>(data), length);
        }

        void flush_noop(png_structp) {}

        void read_from_view(png_structp png, png_bytep data, png_size_t length) {
            auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
            if (cur->pos + length > cur->bytes.size())
                png_error(png, "truncated PNG");
            std::memcpy(data, cur->bytes.data() + cur->pos, length);
            cur->pos += length;
        }

        thread_local std::string png_error_message;

        [[noreturn]] void on_png_error(png_structp png, png_const_charp msg) {
            png_error_message = msg;
            png_longjmp(png, 1);
        }
        void on_png_warning(png_structp, png_const_charp) {}

        // rows: row-major samples, `channels` per pixel, `bit_depth` 8 or 16 (16 stored big-endian).
        std::string encode(const std::vector<unsigned char>& rows, std::size_t h, std::size_t w,
                           int color_type, int bit_depth, std::size_t bytes_per_row) {
            std::string out;
            png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, on_png_error, on_png_warning);
            if (!png)
                throw FormatError("png_create_write_struct failed");
            png_infop info = png_create_info_struct(png);
            if (setjmp(png_jmpbuf(png))) {
                png_destroy_write_struct(&png, &info);
                throw FormatError("PNG encode failed: " + png_error_message);
            }
            {
                png_set_write_fn(png, &out, write_to_string, flush_noop);
                png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), bit_depth,
                             color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                             PNG_FILTER_TYPE_DEFAULT);
                png_write_info(png, info);
                for (std::size_t y = 0; y < h; ++y)
                    png_write_row(png, const_cast<png_bytep>(rows.data() + y * bytes_per_row));
                png_write_end(png, nullptr);
            }
            png_destroy_write_struct(&png, &info);
            return out;
        }

        unsigned char to_u8(double v) {
            return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
        }

        void write_file(const std::filesystem::path& path, const std::string& bytes) {
            if (path.has_parent_path())
                std::filesystem::create_directories(path.parent_path());
            std::ofstream out(path, std::ios::binary | std::ios::trunc);
            if (!out)
                throw FormatError("cannot write '" + path.string() + "'");
            out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        }

        struct Decoded {
            std::size_t h = 0, w = 0, channels = 0;
            int bit_depth = 8;
            std::vector<unsigned char> rows;
            std::size_t row_bytes = 0;

            double sample(std::size_t y, std::size_t x, std::size_t c) const {
                const std::size_t idx = x * channels + c;
                if (bit_depth == 16) {
                    const auto* p = rows.data() + y * row_bytes + idx * 2;
                    return static_cast<double>((p[0] << 8) | p[1]) / 65535.0;
                }
                return static_cast<double>(rows[y * row_bytes + idx]) / 255.0;
            }
        };

        Decoded decode(std::string_view bytes) {
            if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0)
                throw FormatError("not a PNG stream");
            png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, on_png_error, on_png_warning);
            if (!png)
                throw FormatError("png_create_read_struct failed");
            png_infop info = png_create_info_struct(png);
            ReadCursor cursor{bytes, 0};
            Decoded d;
            if (setjmp(png_jmpbuf(png))) {
                png_destroy_read_struct(&png, &info, nullptr);
                throw FormatError("PNG decode failed: " + png_error_message);
            }
            {
                png_set_read_fn(png, &cursor, read_from_view);
                png_read_info(png, info);
                const int color_type = png_get_color_type(png, info);
                if (color_type == PNG_COLOR_TYPE_PALETTE)
                    png_set_palette_to_rgb(png);
                if (png_get_bit_depth(png, info) < 8)
                    png_set_expand_gray_1_2_4_to_8(png);
                png_read_update_info(png, info);
                d.h = png_get_image_height(png, info);
                d.w = png_get_image_width(png, info);
                d.channels = png_get_channels(png, info);
                d.bit_depth = png_get_bit_depth(png, info);
                d.row_bytes = png_get_rowbytes(png, info);
                d.rows.resize(d.row_bytes * d.h);
                for (std::size_t y = 0; y < d.h; ++y)
                    png_read_row(png, d.rows.data() + y * d.row_bytes, nullptr);
            }
            png_destroy_read_struct(&png, &info, nullptr);
            return d;
        }

        std::string read_file(const std::filesystem::path& path) {
            std::ifstream in(path, std::ios::binary);
            if (!in)
                throw FormatError("cannot open '" + path.string() + "'");
            std::ostringstream ss;
            ss << in.rdbuf();
            return ss.str();
        }
    } // namespace

    std::string encode_png_rgb(const Tensor& rgb) {
        if (rgb.ndim() != 3 || rgb.dim(2) != 3)
            throw ShapeError("encode_png_rgb expects {H, W, 3}, got " + rgb.shape_str());
        const std::size_t h = rgb.dim(0), w = rgb.dim(1);
        std::vector<unsigned char> rows(h * w * 3);
        for (std::size_t i = 0; i < rows.size(); ++i)
            rows[i] = to_u8(rgb[i]);
        return encode(rows, h, w, PNG_COLOR_TYPE_RGB, 8, w * 3);
    }

    std::string encode_png_gray(const Tensor& gray) {
        if (gray.ndim() != 2)
            throw ShapeError("encode_png_gray expects {H, W}, got " + gray.shape_str());
        const std::size_t h = gray.dim(0), w = gray.dim(1);
        std::vector<unsigned char> rows(h * w);
        for (std::size_t i = 0; i < rows.size(); ++i)
            rows[i] = to_u8(gray[i]);
        return encode(rows, h, w, PNG_COLOR_TYPE_GRAY, 8, w);
    }

    std::string encode_png_depth16(const Tensor& depth, double far_plane) {
        if (depth.ndim() != 2)
            throw ShapeError("encode_png_depth16 expects {H, W}, got " + depth.shape_str());
        if (!(far_plane > 0.0))
            throw InputError("far plane must be positive");
        const std::size_t h = depth.dim(0), w = depth.dim(1);
        std::vector<unsigned char> rows(h * w * 2);
        for (std::size_t i = 0; i < h * w; ++i) {
            const auto q = static_cast<unsigned>(std::lround(std::clamp(depth[i] / far_plane, 0.0, 1.0) * 65535.0));
            rows[2 * i] = static_cast<unsigned char>(q >> 8);
            rows[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
        }
        return encode(rows, h, w, PNG_COLOR_TYPE_GRAY, 16, w * 2);
    }

    void write_png_rgb(const std::filesystem::path& path, const Tensor& rgb) {
        write_file(path, encode_png_rgb(rgb));
    }

    void write_png_gray(const std::filesystem::path& path, const Tensor& gray) {
        write_file(path, encode_png_gray(gray));
    }

    void write_png_depth16(const std::filesystem::path& path, const Tensor& depth, double far_plane) {
        write_file(path, encode_png_depth16(depth, far_plane));
    }

    Tensor decode_png_rgb(std::string_view bytes) {
        const auto d = decode(bytes);
        Tensor out({d.h, d.w, 3});
        for (std::size_t y = 0; y < d.h; ++y) {
            for (std::size_t x = 0; x < d.w; ++x) {
                for (std::size_t c = 0; c < 3; ++c)
                    out.at(y, x, c) = d.sample(y, x, d.channels >= 3 ? c : 0);
            }
        }
        return out;
    }

    Tensor read_png_rgb(const std::filesystem::path& path) { return decode_png_rgb(read_file(path)); }

    Tensor decode_png_depth16(std::string_view bytes, double far_plane) {
        const auto d = decode(bytes);
        Tensor out({d.h, d.w});
        for (std::size_t y = 0; y < d.h; ++y) {
            for (std::size_t x = 0; x < d.w; ++x)
                out.at(y, x) = d.sample(y, x, 0) * far_plane;
        }
        return out;
    }

    Tensor resize_bilinear(const Tensor& image, std::size_t out_h, std::size_t out_w) {
        if (image.ndim() != 2 && image.ndim() != 3)
            throw ShapeError("resize_bilinear expects {H, W} or {H, W, C}");
        const std::size_t in_h = image.dim(0), in_w = image.dim(1);
        const std::size_t channels = image.ndim() == 3 ? image.dim(2) : 1;
        Shape out_shape = image.ndim() == 3 ? Shape{out_h, out_w, channels} : Shape{out_h, out_w};
        Tensor out(out_shape);
        const double sy = static_cast<double>(in_h) / static_cast<double>(out_h);
        const double sx = static_cast<double>(in_w) / static_cast<double>(out_w);
        for (std::size_t y = 0; y < out_h; ++y) {
            const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, static_cast<double>(in_h - 1));
            const auto y0 = static_cast<std::size_t>(fy);
            const std::size_t y1 = std::min(y0 + 1, in_h - 1);
            const double wy = fy - static_cast<double>(y0);
            for (std::size_t x = 0; x < out_w; ++x) {
                const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, static_cast<double>(in_w - 1));
                const auto x0 = static_cast<std::size_t>(fx);
                const std::size_t x1 = std::min(x0 + 1, in_w - 1);
                const double wx = fx - static_cast<double>(x0);
                for (std::size_t c = 0; c < channels; ++c) {
                    const auto px = [&](std::size_t yy, std::size_t xx) { return image[(yy * in_w + xx) * channels + c]; };
                    const double top = px(y0, x0) * (1.0 - wx) + px(y0, x1) * wx;
                    const double bottom = px(y1, x0) * (1.0 - wx) + px(y1, x1) * wx;
                    out[(y * out_w + x) * channels + c] = top * (1.0 - wy) + bottom * wy;
                }
            }
        }
        return out;
    }

    Tensor hstack_frames(const std::vector<Tensor>& frames) {
        if (frames.empty())
            throw InputError("hstack_frames needs at least one frame");
        const std::size_t h = frames.front().dim(0), w = frames.front().dim(1);
        Tensor out({h, w * frames.size(), 3});
        for (std::size_t f = 0; f < frames.size(); ++f) {
            if (frames[f].shape() != frames.front().shape())
                throw ShapeError("hstack_frames: frames differ in shape");
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x)
                    for (std::size_t c = 0; c < 3; ++c)
                        out.at(y, f * w + x, c) = frames[f].at(y, x, c);
        }
        return out;
    }

} // namespace latentedit
