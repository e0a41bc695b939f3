// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "latentedit/latent_ops/latent_ops.hpp"
#include "latentedit/core/error.hpp"
#include "latentedit/core/tensor_io.hpp"

namespace latentedit {

    void EditVector::validate(const LatentShape& expected) const {
        if (delta.ndim() != 2 || delta.dim(0) != expected.rows || delta.dim(1) != expected.cols)
            throw ShapeError("edit vector shape " + delta.shape_str() + " does not match latent shape " +
                             shape_to_string(expected.as_shape()));
        if (n_pairs < 1)
            throw InputError("edit vector must come from at least one pair");
    }

    Latent scale_edit(const Latent& r_src, const Latent& r_edit, double eta) {
        require_same_shape(r_src.data, r_edit.data, "scale_edit");
        Tensor out = r_src.data;
        out.add_scaled(r_edit.data - r_src.data, eta);
        return {std::move(out), r_src.codec_id};
    }

    EditChain sequential_edit(const std::vector<EditStep>& steps, const Latent& r, std::uint64_t seed) {
        EditChain result;
        result.chain.push_back(r);
        for (std::size_t i = 0; i < steps.size(); ++i) {
            if (!steps[i].editor)
                throw InputError("edit step " + std::to_string(i) + " has no editor");
            result.chain.push_back(steps[i].editor->edit(result.chain.back(), steps[i].instruction, seed + i));
        }
        result.final = result.chain.back();
        return result;
    }

    EditChain sequential_edit(const Editor& editor, const Latent& r, const std::vector<std::string>& instructions,
                              std::uint64_t seed) {
        // Fail before any forward pass when an instruction is unknown.
        for (const auto& y : instructions)
            editor.params().instruction_index(y);
        std::vector<EditStep> steps;
        for (const auto& y : instructions)
            steps.push_back({&editor, y});
        return sequential_edit(steps, r, seed);
    }

    EditVector extract_edit_vector(const std::vector<std::pair<Latent, Latent>>& pairs,
                                   const std::string& instruction) {
        if (pairs.empty())
            throw InputError("extract_edit_vector needs at least one pair");
        const Shape& shape = pairs.front().first.data.shape();
        Tensor delta = Tensor::zeros(shape);
        for (const auto& [src, edit] : pairs) {
            if (src.data.shape() != shape || edit.data.shape() != shape)
                throw ShapeError("inconsistent latent shapes in edit pairs");
            delta += edit.data - src.data;
        }
        delta *= 1.0 / static_cast<double>(pairs.size());
        return {std::move(delta), instruction, static_cast<int>(pairs.size())};
    }

    Latent apply_edit_vector(const Latent& r, const EditVector& v, double eta) {
        require_same_shape(r.data, v.delta, "apply_edit_vector");
        Tensor out = r.data;
        out.add_scaled(v.delta, eta);
        return {std::move(out), r.codec_id};
    }

    void save_edit_vector(const std::filesystem::path& path, const EditVector& v) {
        if (v.n_pairs < 1)
            throw InputError("edit vector must come from at least one pair");
        write_tensor_container(path, {{"delta", v.delta}});
        write_json(sidecar_path(path), {{"kind", "edit_vector"},
                                        {"instruction", v.instruction_text},
                                        {"n_pairs", v.n_pairs},
                                        {"shape", v.delta.shape()}});
    }

    EditVector load_edit_vector(const std::filesystem::path& path) {
        auto tensors = read_tensor_container(path);
        auto it = tensors.find("delta");
        if (it == tensors.end())
            throw FormatError("'" + path.string() + "' has no 'delta' entry");
        const auto meta = read_json(sidecar_path(path));
        if (meta.value("kind", "") != "edit_vector")
            throw FormatError("'" + sidecar_path(path).string() + "' is not an edit vector manifest");
        EditVector v{std::move(it->second), meta.value("instruction", ""), meta.value("n_pairs", 0)};
        if (v.n_pairs < 1)
            throw FormatError("edit vector manifest has n_pairs < 1");
        if (meta.contains("shape") && meta["shape"].get<Shape>() != v.delta.shape())
            throw FormatError("manifest shape disagrees with '" + path.string() + "'");
        return v;
    }

} // namespace latentedit
