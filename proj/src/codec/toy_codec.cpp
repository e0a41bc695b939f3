// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "latentedit/codec/toy_codec.hpp"
#include "latentedit/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace latentedit {

    namespace {
        constexpr const char* kDecoderId = "toy-blob";

        struct ToyField final : FieldData {
            std::vector<Vec3> centers;
            std::vector<double> code;    // density code a per cell
            std::vector<Vec3> colors;    // exp(log rgb)
        };

        // (1 - e^-T) / T and its derivative, stable near T = 0.
        double transmit_ratio(double T) {
            if (T < 1e-6)
                return 1.0 - T / 2.0 + T * T / 6.0;
            return -std::expm1(-T) / T;
        }

        double transmit_ratio_deriv(double T) {
            if (T < 1e-3)
                return -0.5 + T / 3.0 - T * T / 8.0 + T * T * T / 30.0;
            return (T * std::exp(-T) + std::expm1(-T)) / (T * T);
        }

        struct BlobScreen {
            double pr, pu, z;
        };

        // Per-render constants shared by forward and backward passes.
        struct RenderSetup {
            int res;
            double half_extent;
            double inv_two_s2;
            double line_norm; // sqrt(2 pi) * s
            std::vector<BlobScreen> blobs;

            double pixel_u(int j) const { return static_cast<double>(2 * j + 1 - res) / res * half_extent; }
            double pixel_v(int i) const { return static_cast<double>(res - 2 * i - 1) / res * half_extent; }

            double kernel(std::size_t k, double u, double v) const {
                const double du = blobs[k].pr - u;
                const double dv = blobs[k].pu - v;
                return line_norm * std::exp(-(du * du + dv * dv) * inv_two_s2);
            }
        };

        RenderSetup make_setup(const ToyCodecConfig& cfg, const std::vector<Vec3>& centers,
                               const Viewpoint& vp, int resolution) {
            if (resolution <= 0)
                throw InputError("render resolution must be positive");
            const auto frame = camera_frame(vp);
            RenderSetup s;
            s.res = resolution;
            s.half_extent = cfg.view_half_extent;
            s.inv_two_s2 = 1.0 / (2.0 * cfg.blob_sigma * cfg.blob_sigma);
            s.line_norm = std::sqrt(2.0 * std::numbers::pi) * cfg.blob_sigma;
            s.blobs.reserve(centers.size());
            for (const auto& c : centers)
                s.blobs.push_back({dot3(c, frame.right), dot3(c, frame.up), vp.radius - dot3(c, frame.toward)});
            return s;
        }
    } // namespace

    void to_json(nlohmann::json& j, const ToyCodecConfig& c) {
        j = nlohmann::json{{"lattice", c.lattice},
                           {"spacing", c.spacing},
                           {"blob_sigma", c.blob_sigma},
                           {"background", c.background},
                           {"far_plane", c.far_plane},
                           {"view_half_extent", c.view_half_extent},
                           {"density_offset", c.density_offset},
                           {"log_color_offset", c.log_color_offset}};
    }

    void from_json(const nlohmann::json& j, ToyCodecConfig& c) {
        c.lattice = j.value("lattice", c.lattice);
        c.spacing = j.value("spacing", c.spacing);
        c.blob_sigma = j.value("blob_sigma", c.blob_sigma);
        if (j.contains("background"))
            c.background = j.at("background").get<Vec3>();
        c.far_plane = j.value("far_plane", c.far_plane);
        c.view_half_extent = j.value("view_half_extent", c.view_half_extent);
        c.density_offset = j.value("density_offset", c.density_offset);
        c.log_color_offset = j.value("log_color_offset", c.log_color_offset);
    }

    ToyCodec::ToyCodec(ToyCodecConfig config)
        : config_(std::move(config)) {
        if (config_.lattice < 1 || !(config_.blob_sigma > 0.0) || !(config_.view_half_extent > 0.0))
            throw ConfigError("invalid toy codec configuration");
    }

    std::string ToyCodec::id() const { return "toy-blob-n" + std::to_string(config_.lattice); }

    LatentShape ToyCodec::latent_shape() const {
        const auto n = static_cast<std::size_t>(config_.lattice);
        return {n * n * n, kChannels};
    }

    Vec3 ToyCodec::cell_center(std::size_t cell) const {
        const auto n = static_cast<std::size_t>(config_.lattice);
        const std::size_t ix = cell / (n * n);
        const std::size_t iy = (cell / n) % n;
        const std::size_t iz = cell % n;
        const double half = (static_cast<double>(n) - 1.0) / 2.0;
        return {(static_cast<double>(ix) - half) * config_.spacing,
                (static_cast<double>(iy) - half) * config_.spacing,
                (static_cast<double>(iz) - half) * config_.spacing};
    }

    Latent ToyCodec::random_latent(Rng& rng) const {
        const auto shape = latent_shape();
        Tensor data(shape.as_shape());
        std::uniform_real_distribution<double> density(-0.3, 0.3), color(-0.5, 0.5);
        for (std::size_t k = 0; k < shape.rows; ++k) {
            data.at(k, 0) = density(rng);
            for (std::size_t c = 1; c < kChannels; ++c)
                data.at(k, c) = color(rng);
        }
        return {std::move(data), id()};
    }

    AssetSource ToyCodec::to_asset(const Latent& latent, std::string class_label,
                                   std::string instance_id) const {
        latent.validate(latent_shape());
        const std::size_t cells = latent_shape().rows;
        PointCloud cloud;
        cloud.xyz_rgb = Tensor({cells, 6});
        for (std::size_t k = 0; k < cells; ++k) {
            const auto c = cell_center(k);
            for (std::size_t a = 0; a < 3; ++a) {
                cloud.xyz_rgb.at(k, a) = c[a];
                cloud.xyz_rgb.at(k, 3 + a) = std::clamp(std::exp(latent.data.at(k, 1 + a) + config_.log_color_offset), 0.0, 1.0);
            }
        }
        cloud.attributes.emplace("code", latent.data);
        AssetSource asset;
        asset.points = std::move(cloud);
        asset.class_label = std::move(class_label);
        asset.instance_id = std::move(instance_id);
        return asset;
    }

    Latent ToyCodec::encode(const AssetSource& asset) const {
        asset.validate();
        if (!asset.points)
            throw InputError("toy codec encodes point clouds only");
        const auto shape = latent_shape();
        const auto& cloud = *asset.points;

        if (auto it = cloud.attributes.find("code"); it != cloud.attributes.end()) {
            if (it->second.shape() != shape.as_shape())
                throw InputError("toy 'code' attribute has shape " + it->second.shape_str() +
                                 ", expected " + shape_to_string(shape.as_shape()));
            return {it->second, id()};
        }

        const std::size_t cells = shape.rows;
        std::vector<double> counts(cells, 0.0);
        std::vector<Vec3> color_sum(cells, Vec3{0.0, 0.0, 0.0});
        for (std::size_t p = 0; p < cloud.size(); ++p) {
            const Vec3 pos{cloud.xyz_rgb.at(p, 0), cloud.xyz_rgb.at(p, 1), cloud.xyz_rgb.at(p, 2)};
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < cells; ++k) {
                const auto c = cell_center(k);
                const double d = (pos[0] - c[0]) * (pos[0] - c[0]) + (pos[1] - c[1]) * (pos[1] - c[1]) +
                                 (pos[2] - c[2]) * (pos[2] - c[2]);
                if (d < best_d) {
                    best_d = d;
                    best = k;
                }
            }
            counts[best] += 1.0;
            for (std::size_t a = 0; a < 3; ++a)
                color_sum[best][a] += cloud.xyz_rgb.at(p, 3 + a);
        }

        const double expected = static_cast<double>(cloud.size()) / static_cast<double>(cells);
        Tensor data(shape.as_shape());
        for (std::size_t k = 0; k < cells; ++k) {
            data.at(k, 0) = std::sqrt(counts[k] / expected) - config_.density_offset;
            for (std::size_t a = 0; a < 3; ++a) {
                const double mean_rgb = counts[k] > 0.0 ? color_sum[k][a] / counts[k] : 1.0;
                data.at(k, 1 + a) = std::log(std::clamp(mean_rgb, 1e-3, 1.0)) - config_.log_color_offset;
            }
        }
        return {std::move(data), id()};
    }

    FieldModel ToyCodec::decode(const Latent& latent) const {
        latent.validate(latent_shape());
        auto field = std::make_shared<ToyField>();
        const std::size_t cells = latent_shape().rows;
        field->centers.reserve(cells);
        for (std::size_t k = 0; k < cells; ++k) {
            field->centers.push_back(cell_center(k));
            field->code.push_back(latent.data.at(k, 0) + config_.density_offset);
            const double off = config_.log_color_offset;
            field->colors.push_back({std::exp(latent.data.at(k, 1) + off), std::exp(latent.data.at(k, 2) + off),
                                     std::exp(latent.data.at(k, 3) + off)});
        }
        return {kDecoderId, std::move(field)};
    }

    RenderedView ToyCodec::render(const FieldModel& model, const Viewpoint& vp, int resolution) const {
        const auto* field = dynamic_cast<const ToyField*>(model.impl.get());
        if (model.decoder_id != kDecoderId || !field)
            throw InputError("field was not produced by the toy codec");

        const auto setup = make_setup(config_, field->centers, vp, resolution);
        const auto res = static_cast<std::size_t>(resolution);
        const std::size_t cells = field->centers.size();
        RenderedView view{Tensor({res, res, 3}), Tensor({res, res}), vp};
        std::vector<double> density(cells);
        for (std::size_t k = 0; k < cells; ++k)
            density[k] = field->code[k] * field->code[k];

        for (int i = 0; i < resolution; ++i) {
            const double v = setup.pixel_v(i);
            for (int j = 0; j < resolution; ++j) {
                const double u = setup.pixel_u(j);
                double T = 0.0, Z = 0.0;
                Vec3 S{0.0, 0.0, 0.0};
                for (std::size_t k = 0; k < cells; ++k) {
                    const double tau = density[k] * setup.kernel(k, u, v);
                    T += tau;
                    Z += tau * setup.blobs[k].z;
                    for (std::size_t c = 0; c < 3; ++c)
                        S[c] += tau * field->colors[k][c];
                }
                const double g = transmit_ratio(T);
                const double e = std::exp(-T);
                for (std::size_t c = 0; c < 3; ++c)
                    view.rgb.at(i, j, c) = std::clamp(g * S[c] + e * config_.background[c], 0.0, 1.0);
                view.depth.at(i, j) = g * Z + e * config_.far_plane;
            }
        }
        return view;
    }

    Tensor ToyCodec::render_backward(const Latent& latent, const Viewpoint& vp, int resolution,
                                     const Tensor& grad_rgb, const Tensor& grad_depth) const {
        latent.validate(latent_shape());
        const auto res = static_cast<std::size_t>(resolution);
        if (grad_rgb.shape() != Shape{res, res, 3} || grad_depth.shape() != Shape{res, res})
            throw ShapeError("render_backward: upstream gradient shapes do not match the render");

        const std::size_t cells = latent_shape().rows;
        std::vector<Vec3> centers(cells), colors(cells);
        std::vector<double> code(cells), density(cells);
        for (std::size_t k = 0; k < cells; ++k) {
            centers[k] = cell_center(k);
            code[k] = latent.data.at(k, 0) + config_.density_offset;
            density[k] = code[k] * code[k];
            for (std::size_t c = 0; c < 3; ++c)
                colors[k][c] = std::exp(latent.data.at(k, 1 + c) + config_.log_color_offset);
        }
        const auto setup = make_setup(config_, centers, vp, resolution);

        Tensor grad(latent_shape().as_shape());
        std::vector<double> kern(cells), tau(cells);
        for (int i = 0; i < resolution; ++i) {
            const double v = setup.pixel_v(i);
            for (int j = 0; j < resolution; ++j) {
                const double u = setup.pixel_u(j);
                double T = 0.0, Z = 0.0;
                Vec3 S{0.0, 0.0, 0.0};
                for (std::size_t k = 0; k < cells; ++k) {
                    kern[k] = setup.kernel(k, u, v);
                    tau[k] = density[k] * kern[k];
                    T += tau[k];
                    Z += tau[k] * setup.blobs[k].z;
                    for (std::size_t c = 0; c < 3; ++c)
                        S[c] += tau[k] * colors[k][c];
                }
                const double g = transmit_ratio(T);
                const double dg = transmit_ratio_deriv(T);
                const double e = std::exp(-T);

                Vec3 gr{};
                for (std::size_t c = 0; c < 3; ++c) {
                    const double raw = g * S[c] + e * config_.background[c];
                    gr[c] = (raw >= 0.0 && raw <= 1.0) ? grad_rgb.at(i, j, c) : 0.0;
                }
                const double gd = grad_depth.at(i, j);

                // d(out)/d(tau_k) = pixel-constant part + g * (per-blob colour/depth part)
                double shared = gd * (dg * Z - e * config_.far_plane);
                for (std::size_t c = 0; c < 3; ++c)
                    shared += gr[c] * (dg * S[c] - e * config_.background[c]);

                for (std::size_t k = 0; k < cells; ++k) {
                    double own = gd * setup.blobs[k].z;
                    for (std::size_t c = 0; c < 3; ++c)
                        own += gr[c] * colors[k][c];
                    const double g_tau = shared + g * own;
                    grad.at(k, 0) += g_tau * 2.0 * code[k] * kern[k];
                    for (std::size_t c = 0; c < 3; ++c)
                        grad.at(k, 1 + c) += gr[c] * g * tau[k] * colors[k][c];
                }
            }
        }
        return grad;
    }

    void AssetSource::validate() const {
        if (!points && views.empty())
            throw InputError("asset has neither a point cloud nor views");
        if (points) {
            const auto& xyz = points->xyz_rgb;
            if (xyz.ndim() != 2 || xyz.dim(1) != 6)
                throw InputError("point cloud must be {N, 6} (xyz + rgb), got " + xyz.shape_str());
            if (xyz.dim(0) == 0)
                throw InputError("point cloud is empty");
            if (!all_finite(xyz))
                throw InputError("point cloud contains non-finite values");
            for (const auto& [name, attr] : points->attributes) {
                if (attr.ndim() < 1 || attr.dim(0) != xyz.dim(0))
                    throw InputError("point attribute '" + name + "' has the wrong length");
            }
        }
        for (const auto& view : views) {
            if (view.ndim() != 3 || view.dim(2) != 3)
                throw InputError("asset views must be {H, W, 3} images");
        }
    }

} // namespace latentedit
