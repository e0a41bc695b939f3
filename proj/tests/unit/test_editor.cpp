// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "latentedit/core/error.hpp"
#include "latentedit/editor/editor.hpp"

#include "oracles.hpp"
#include "toy_world.hpp"

#include <gtest/gtest.h>

using namespace latentedit;
using namespace latentedit::testing;

namespace {

    const LatentShape kShape{6, 4};

    StackedInput random_input(Rng& rng) {
        const Latent r{Tensor::randn(kShape.as_shape(), rng, 0.3), "toy"};
        return stack_input(r, Tensor::randn(kShape.as_shape(), rng), NoiseSchedule::shap_e_compatible(),
                           kDefaultEditorTau);
    }

} // namespace

TEST(Editor, StackInput) {
    Rng rng(1);
    const Latent r{Tensor::randn({3, 4}, rng), "toy"};
    const Tensor eps = Tensor::randn({3, 4}, rng);
    const auto s = NoiseSchedule::shap_e_compatible();
    const StackedInput in = stack_input(r, eps, s, kDefaultEditorTau);
    EXPECT_EQ(in.noised, noise_sample(r.data, s, kDefaultEditorTau, eps));
    EXPECT_EQ(in.clean, r.data);
    const Tensor st = in.stacked();
    EXPECT_EQ(st.shape(), (Shape{3, 8}));
    EXPECT_EQ(st.at(2, 5), r.data.at(2, 1));
    EXPECT_EQ(st.at(1, 0), in.noised.at(1, 0));
}

TEST(Editor, InitializationReproducesBase) {
    Rng rng(7);
    const BaseDenoiser base = BaseDenoiser::random(kShape, 8, rng, 0.2);
    const std::vector<std::string> instr{"make it redder", "Make it look like made of gold"};
    const Editor editor(init_from_pretrained(base, kShape, instr));
    for (int i = 0; i < 4; ++i) {
        const StackedInput in = random_input(rng);
        for (std::size_t k = 0; k < instr.size(); ++k)
            EXPECT_EQ(max_abs_diff(editor.forward(in, k), base.forward(in.noised, instr[k])), 0.0);
    }
    const Tensor& w_in = editor.params().tensors.at("w_in");
    EXPECT_EQ(w_in.shape(), (Shape{4, 8}));
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 4; j < 8; ++j)
            EXPECT_EQ(w_in.at(i, j), 0.0);
}

TEST(Editor, IdentityBase) {
    Rng rng(2);
    const BaseDenoiser base = BaseDenoiser::identity(kShape, 4);
    const Tensor x = Tensor::randn(kShape.as_shape(), rng);
    EXPECT_EQ(base.forward(x, "anything"), x);
}

TEST(Editor, RandomInitAblationDiffers) {
    Rng rng(7);
    const BaseDenoiser base = BaseDenoiser::random(kShape, 8, rng);
    InitOptions opt;
    opt.random_init = true;
    opt.seed = 3;
    const Editor editor(init_from_pretrained(base, kShape, {"x"}, opt));
    const StackedInput in = random_input(rng);
    EXPECT_GT(max_abs_diff(editor.forward(in, 0), base.forward(in.noised, "x")), 1e-3);
}

TEST(Editor, BackwardMatchesFiniteDifferences) {
    Rng rng(11);
    const BaseDenoiser base = BaseDenoiser::random(kShape, 5, rng, 0.3);
    InitOptions opt;
    opt.random_init = true;
    Editor editor(init_from_pretrained(base, kShape, {"a", "b"}, opt));
    const StackedInput in = random_input(rng);
    const Tensor g_out = Tensor::randn(kShape.as_shape(), rng);

    EditorTrace trace;
    editor.forward(in, 1, &trace);
    TensorMap grads = editor.zero_grads();
    editor.backward(trace, g_out, grads);

    for (auto& [name, param] : editor.mutable_params().tensors) {
        Tensor& p = param;
        auto loss = [&](const Tensor& v) {
            const Tensor keep = p;
            p = v;
            const double l = dot(editor.forward(in, 1), g_out);
            p = keep;
            return l;
        };
        const Tensor fd = central_difference(loss, Tensor(p), 1e-6);
        if (name == "embed") {
            // Only the row of the active instruction receives gradient.
            for (std::size_t j = 0; j < fd.dim(1); ++j)
                EXPECT_EQ(grads.at(name).at(0, j), 0.0);
        }
        EXPECT_LT(relative_error(grads.at(name), fd), 1e-6) << name;
    }
}

TEST(Editor, UnknownInstruction) {
    const Editor editor(init_from_pretrained(BaseDenoiser::identity(kShape, 4), kShape, {kRedder}));
    const Latent r{Tensor(kShape.as_shape()), "toy"};
    EXPECT_THROW(editor.edit(r, "make it bluer", 1), InstructionError);
    EXPECT_THROW(editor.edit({Tensor({2, 4}), "toy"}, kRedder, 1), ShapeError);
}

TEST(Editor, EditIsDeterministicAndCounted) {
    Rng rng(4);
    const Editor editor(init_from_pretrained(BaseDenoiser::random(kShape, 6, rng), kShape, {kRedder}));
    const Latent r{Tensor::randn(kShape.as_shape(), rng), "toy"};
    const Latent a = editor.edit(r, kRedder, std::uint64_t{42});
    const Latent b = editor.edit(r, kRedder, std::uint64_t{42});
    EXPECT_TRUE(bitwise_equal(a.data, b.data));
    EXPECT_EQ(a.codec_id, "toy");
    EXPECT_EQ(editor.forward_count(), 2u);
}

TEST(Editor, SaveLoadRoundTrip) {
    TempDir dir;
    Rng rng(5);
    InitOptions opt;
    opt.random_init = true;
    EditorParams p = init_from_pretrained(BaseDenoiser::random(kShape, 6, rng), kShape, {kRedder, "Add a hat"}, opt);
    p.instruction_kinds = {EditKind::Global, EditKind::Local};
    save_editor(dir.path, p, {{"learning_rate", 0.1}});
    const EditorParams q = load_editor(dir.path);
    EXPECT_EQ(q.checksum(), p.checksum());
    EXPECT_EQ(q.instructions, p.instructions);
    EXPECT_EQ(q.instruction_kind(1), EditKind::Local);
    EXPECT_EQ(q.tau, kDefaultEditorTau);
    EXPECT_EQ(read_json(dir.path / "manifest.json")["architecture"], kToyEditorArchitecture);
}

TEST(Editor, ValidateRejectsBadParams) {
    EditorParams p = init_from_pretrained(BaseDenoiser::identity(kShape, 4), kShape, {kRedder});
    EXPECT_NO_THROW(p.validate());
    EditorParams wrong = p;
    wrong.tensors["w1"] = Tensor({3, 3});
    EXPECT_THROW(wrong.validate(), Error);
    EditorParams kinds = p;
    kinds.instruction_kinds = {EditKind::Global, EditKind::Local};
    EXPECT_THROW(kinds.validate(), Error);
    TempDir dir;
    EXPECT_THROW(load_editor(dir.path), Error);
}

TEST(Editor, HashedEmbeddingIsStable) {
    const Tensor a = hashed_text_embedding("make it redder", 16);
    EXPECT_EQ(a, hashed_text_embedding("make it redder", 16));
    EXPECT_NE(a, hashed_text_embedding("make it greener", 16));
    EXPECT_EQ(a.shape(), (Shape{16}));
}

TEST(Editor, StackInputEdgeCases) {
    Rng rng(3);
    const Latent r{Tensor::randn({3, 4}, rng), "toy"};
    const auto s = NoiseSchedule::shap_e_compatible();
    const StackedInput zero_eps = stack_input(r, Tensor({3, 4}), s, kDefaultEditorTau);
    EXPECT_EQ(zero_eps.noised, r.data * schedule_at(s, kDefaultEditorTau).alpha);
    const StackedInput clean = stack_input(r, Tensor::randn({3, 4}, rng), s, 0);
    EXPECT_EQ(clean.noised, r.data);
}

TEST(Editor, FreshIdentityEditorPassesNoisedHalfThrough) {
    Rng rng(4);
    const Editor editor(init_from_pretrained(BaseDenoiser::identity(kShape, 4), kShape, {kRedder}));
    const Latent r{Tensor::randn(kShape.as_shape(), rng), "toy"};
    Rng a(99), b(99);
    const Latent out = editor.edit(r, kRedder, a);
    const StackedInput in = stack_input(r, Tensor::randn(kShape.as_shape(), b), editor.schedule(), kDefaultEditorTau);
    EXPECT_EQ(out.data, in.noised);
}
