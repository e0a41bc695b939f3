// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "latentedit/core/tensor.hpp"

#include <map>
#include <string>
#include <vector>

namespace latentedit {

    /// Joint image-text embedding model used by the similarity metrics.
    class ImageTextEmbedder {
    public:
        virtual ~ImageTextEmbedder() = default;
        virtual std::string id() const = 0;
        /// {H, W, 3} image in [0, 1] -> 1-D embedding.
        virtual Tensor embed_image(const Tensor& rgb) const = 0;
        virtual Tensor embed_text(const std::string& text) const = 0;
    };

    /// Vision backbone producing a self-similarity descriptor of an image.
    class StructureBackbone {
    public:
        virtual ~StructureBackbone() = default;
        virtual std::string id() const = 0;
        virtual Tensor self_similarity(const Tensor& rgb) const = 0;
    };

    /*
     * Image embedding: mean colour of the whole image and of each cell of a
     * grid x grid partition, centred at 0.5. Text embedding: sum of per-word
     * vectors; words without a registered vector get a hashed Gaussian one.
     */
    class ToyEmbedder final : public ImageTextEmbedder {
    public:
        explicit ToyEmbedder(std::size_t grid = 4);

        std::string id() const override { return "toy-embedder"; }
        std::size_t dim() const { return 3 * (1 + grid_ * grid_); }
        Tensor embed_image(const Tensor& rgb) const override;
        Tensor embed_text(const std::string& text) const override;

        /// Registers the vector of a (lower-cased) word; must have dim() entries.
        void set_word(const std::string& word, Tensor vector);
        /// Word vector pointing along the global colour feature `rgb`.
        void set_color_word(const std::string& word, double r, double g, double b);

    private:
        std::size_t grid_;
        std::map<std::string, Tensor> words_;
    };

    /// Cosine self-similarity of the colour features of grid x grid patches.
    class ToyBackbone final : public StructureBackbone {
    public:
        explicit ToyBackbone(std::size_t grid = 8)
            : grid_(grid) {}

        std::string id() const override { return "toy-patch-self-similarity"; }
        Tensor self_similarity(const Tensor& rgb) const override;

    private:
        std::size_t grid_;
    };

    /// Cosine similarity; 0 when either vector is zero.
    double cosine(const Tensor& a, const Tensor& b);

    /// Mean over images of cos(E_I(x), E_T(target_text)).
    double clip_sim(const std::vector<Tensor>& images, const std::string& target_text,
                    const ImageTextEmbedder& embedder);

    /// Mean over views of cos(E_I(edit) - E_I(src), E_T(target) - E_T(source)).
    /// A view whose image direction is zero contributes 0.
    double clip_dir(const std::vector<Tensor>& src_images, const std::vector<Tensor>& edit_images,
                    const std::string& source_text, const std::string& target_text,
                    const ImageTextEmbedder& embedder);

    /// 1 - cos of the backbone self-similarity descriptors; 0 for identical images.
    double structure_distance(const Tensor& img_a, const Tensor& img_b, const StructureBackbone& backbone);

} // namespace latentedit
