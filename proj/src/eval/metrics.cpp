// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "latentedit/eval/metrics.hpp"
#include "latentedit/core/error.hpp"
#include "latentedit/editor/editor.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <sstream>

namespace latentedit {

    namespace {

        void expect_image(const Tensor& rgb) {
            if (rgb.ndim() != 3 || rgb.dim(2) != 3 || rgb.dim(0) == 0 || rgb.dim(1) == 0)
                throw ShapeError("expected an {H, W, 3} image, got " + rgb.shape_str());
        }

        // Mean colour of rows [r0, r1) x cols [c0, c1).
        std::array<double, 3> cell_mean(const Tensor& rgb, std::size_t r0, std::size_t r1, std::size_t c0,
                                        std::size_t c1) {
            std::array<double, 3> acc{0, 0, 0};
            for (std::size_t i = r0; i < r1; ++i)
                for (std::size_t j = c0; j < c1; ++j)
                    for (std::size_t c = 0; c < 3; ++c)
                        acc[c] += rgb.at(i, j, c);
            const double n = static_cast<double>((r1 - r0) * (c1 - c0));
            for (auto& v : acc)
                v = n > 0 ? v / n : 0.0;
            return acc;
        }

        // Grid cell boundaries; cells may be empty when the image is smaller than the grid.
        std::size_t edge(std::size_t k, std::size_t grid, std::size_t size) { return k * size / grid; }

        std::vector<std::array<double, 3>> patch_means(const Tensor& rgb, std::size_t grid) {
            std::vector<std::array<double, 3>> out;
            const std::size_t h = rgb.dim(0), w = rgb.dim(1);
            for (std::size_t gi = 0; gi < grid; ++gi)
                for (std::size_t gj = 0; gj < grid; ++gj)
                    out.push_back(cell_mean(rgb, edge(gi, grid, h), edge(gi + 1, grid, h), edge(gj, grid, w),
                                            edge(gj + 1, grid, w)));
            return out;
        }

    } // namespace

    double cosine(const Tensor& a, const Tensor& b) {
        require_same_shape(a, b, "cosine");
        const double na = dot(a, a), nb = dot(b, b);
        if (na == 0.0 || nb == 0.0)
            return 0.0;
        // sqrt(na * nb) rather than sqrt(na) * sqrt(nb): for a == b it is exactly na.
        return std::clamp(dot(a, b) / std::sqrt(na * nb), -1.0, 1.0);
    }

    ToyEmbedder::ToyEmbedder(std::size_t grid)
        : grid_(grid) {
        if (grid == 0)
            throw ConfigError("toy embedder grid must be positive");
    }

    Tensor ToyEmbedder::embed_image(const Tensor& rgb) const {
        expect_image(rgb);
        Tensor out({dim()});
        const auto global = cell_mean(rgb, 0, rgb.dim(0), 0, rgb.dim(1));
        for (std::size_t c = 0; c < 3; ++c)
            out[c] = global[c] - 0.5;
        const auto cells = patch_means(rgb, grid_);
        for (std::size_t k = 0; k < cells.size(); ++k)
            for (std::size_t c = 0; c < 3; ++c)
                out[3 + 3 * k + c] = cells[k][c] - 0.5;
        return out;
    }

    Tensor ToyEmbedder::embed_text(const std::string& text) const {
        Tensor out({dim()});
        std::istringstream words(text);
        std::string w;
        while (words >> w) {
            std::string key;
            for (char ch : w)
                if (std::isalnum(static_cast<unsigned char>(ch)))
                    key += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
            if (key.empty())
                continue;
            auto it = words_.find(key);
            out += it != words_.end() ? it->second : hashed_text_embedding(key, dim(), 1.0);
        }
        return out;
    }

    void ToyEmbedder::set_word(const std::string& word, Tensor vector) {
        if (vector.ndim() != 1 || vector.size() != dim())
            throw ShapeError("word vector must have " + std::to_string(dim()) + " entries");
        std::string key;
        for (char ch : word)
            key += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        words_[key] = std::move(vector);
    }

    void ToyEmbedder::set_color_word(const std::string& word, double r, double g, double b) {
        Tensor v({dim()});
        v[0] = r;
        v[1] = g;
        v[2] = b;
        set_word(word, std::move(v));
    }

    Tensor ToyBackbone::self_similarity(const Tensor& rgb) const {
        expect_image(rgb);
        const auto cells = patch_means(rgb, grid_);
        const std::size_t n = cells.size();
        Tensor out({n, n});
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) {
                double ab = 0, aa = 0, bb = 0;
                for (std::size_t c = 0; c < 3; ++c) {
                    ab += cells[a][c] * cells[b][c];
                    aa += cells[a][c] * cells[a][c];
                    bb += cells[b][c] * cells[b][c];
                }
                out.at(a, b) = (aa == 0.0 || bb == 0.0) ? 0.0 : ab / std::sqrt(aa * bb);
            }
        }
        return out;
    }

    double clip_sim(const std::vector<Tensor>& images, const std::string& target_text,
                    const ImageTextEmbedder& embedder) {
        if (images.empty())
            throw InputError("clip_sim needs at least one image");
        const Tensor t = embedder.embed_text(target_text);
        double acc = 0.0;
        for (const auto& img : images)
            acc += cosine(embedder.embed_image(img), t);
        return acc / static_cast<double>(images.size());
    }

    double clip_dir(const std::vector<Tensor>& src_images, const std::vector<Tensor>& edit_images,
                    const std::string& source_text, const std::string& target_text,
                    const ImageTextEmbedder& embedder) {
        if (src_images.size() != edit_images.size())
            throw InputError("clip_dir: " + std::to_string(src_images.size()) + " source images but " +
                             std::to_string(edit_images.size()) + " edited images");
        if (src_images.empty())
            throw InputError("clip_dir needs at least one view");
        const Tensor text_dir = embedder.embed_text(target_text) - embedder.embed_text(source_text);
        double acc = 0.0;
        for (std::size_t v = 0; v < src_images.size(); ++v) {
            const Tensor image_dir = embedder.embed_image(edit_images[v]) - embedder.embed_image(src_images[v]);
            acc += cosine(image_dir, text_dir);
        }
        return acc / static_cast<double>(src_images.size());
    }

    double structure_distance(const Tensor& img_a, const Tensor& img_b, const StructureBackbone& backbone) {
        if (img_a.shape() != img_b.shape())
            throw ShapeError("structure_distance: image shapes " + img_a.shape_str() + " and " +
                             img_b.shape_str() + " differ");
        return 1.0 - cosine(backbone.self_similarity(img_a), backbone.self_similarity(img_b));
    }

} // namespace latentedit
