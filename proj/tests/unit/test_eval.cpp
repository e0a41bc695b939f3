// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "latentedit/codec/image_io.hpp"
#include "latentedit/core/error.hpp"
#include "latentedit/eval/evaluate.hpp"

#include "toy_world.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace latentedit;
using namespace latentedit::testing;

namespace {

    Tensor vec(std::vector<double> v) {
        const std::size_t n = v.size();
        return Tensor({n}, std::move(v));
    }

    Tensor keyed(double key) { return flat_image(2, 2, key, 0.0, 0.0); }

    std::vector<EvalPair> red_pairs(const ToyCodec& codec, int n) {
        Rng rng(3);
        std::vector<EvalPair> out;
        for (int i = 0; i < n; ++i)
            out.push_back({codec.random_latent(rng), "a", AssetOrigin::Generated, EditInstruction::global(kRedder),
                           "object", "red object"});
        return out;
    }

    EvalConfig small_eval() {
        EvalConfig cfg;
        cfg.views = 4;
        cfg.render_resolution = 16;
        cfg.metric_resolution = 32;
        return cfg;
    }

} // namespace

TEST(Metrics, Cosine) {
    EXPECT_EQ(cosine(vec({1, 2, 3}), vec({1, 2, 3})), 1.0);
    EXPECT_EQ(cosine(vec({1, 0}), vec({0, 3})), 0.0);
    EXPECT_DOUBLE_EQ(cosine(vec({1, 0}), vec({-2, 0})), -1.0);
    EXPECT_EQ(cosine(vec({0, 0}), vec({1, 1})), 0.0);
    EXPECT_THROW(cosine(vec({1}), vec({1, 2})), ShapeError);
}

TEST(Metrics, ClipSimPins) {
    TableEmbedder e;
    e.images = {{0.1, vec({1, 0})}, {0.2, vec({0, 1})}};
    e.texts = {{"t", vec({1, 1})}, {"s", vec({1, 0})}};
    EXPECT_NEAR(clip_sim({keyed(0.1)}, "t", e), 0.7071067811865476, 5e-5);
    EXPECT_NEAR(clip_sim({keyed(0.1), keyed(0.2)}, "s", e), 0.5, 1e-15);
}

TEST(Metrics, ClipDirPins) {
    TableEmbedder e;
    e.images = {{0.1, vec({1, 0})}, {0.2, vec({1, 1})}, {0.3, vec({0, 0})}};
    e.texts = {{"s", vec({0, 0})}, {"t", vec({0, 2})}, {"u", vec({2, 0})}};
    EXPECT_DOUBLE_EQ(clip_dir({keyed(0.1)}, {keyed(0.2)}, "s", "t", e), 1.0);
    EXPECT_DOUBLE_EQ(clip_dir({keyed(0.1)}, {keyed(0.2)}, "s", "u", e), 0.0);
    // Unchanged view: zero image direction contributes 0.
    EXPECT_DOUBLE_EQ(clip_dir({keyed(0.1), keyed(0.1)}, {keyed(0.2), keyed(0.1)}, "s", "t", e), 0.5);
    EXPECT_THROW(clip_dir({keyed(0.1)}, {}, "s", "t", e), InputError);
}

TEST(Metrics, StructureDistancePins) {
    TableBackbone b;
    b.descriptors = {{0.1, vec({1, 0, 0})}, {0.2, vec({0, 1, 0})}, {0.3, vec({1, 1, 0})}, {0.4, vec({1, 1})}};
    EXPECT_EQ(structure_distance(keyed(0.1), keyed(0.1), b), 0.0);
    EXPECT_DOUBLE_EQ(structure_distance(keyed(0.1), keyed(0.2), b), 1.0);
    EXPECT_NEAR(structure_distance(keyed(0.1), keyed(0.3), b), 1.0 - 0.7071067811865476, 5e-5);
    EXPECT_THROW(structure_distance(keyed(0.1), keyed(0.4), b), ShapeError);
}

TEST(ToyEmbedder, ImageAndTextFeatures) {
    ToyEmbedder e(2);
    EXPECT_EQ(e.dim(), 15u);
    const Tensor img = flat_image(4, 4, 0.5, 0.5, 0.5);
    EXPECT_EQ(max_abs(e.embed_image(img)), 0.0);
    e.set_color_word("red", 1.0, 0.0, 0.0);
    const Tensor red_img = flat_image(4, 4, 0.9, 0.5, 0.5);
    EXPECT_GT(cosine(e.embed_image(red_img), e.embed_text("Red")), 0.0);
    EXPECT_EQ(e.embed_text("a red"), e.embed_text("A, RED!"));
    EXPECT_NE(e.embed_text("a"), e.embed_text("b"));
    EXPECT_THROW(e.set_word("x", Tensor({3})), ShapeError);
}

TEST(ToyBackbone, SelfSimilarity) {
    ToyBackbone b(4);
    Rng rng(2);
    const Tensor img = Tensor::uniform({16, 16, 3}, rng, 0.1, 0.9);
    EXPECT_EQ(structure_distance(img, img, b), 0.0);
    Tensor brighter = img;
    brighter *= 1.1;
    // A global gain keeps patch colour directions, so the descriptor is unchanged.
    EXPECT_LT(structure_distance(img, brighter, b), 1e-12);
    // Same colours, different layout.
    Tensor split({16, 16, 3}), swapped({16, 16, 3});
    for (std::size_t y = 0; y < 16; ++y)
        for (std::size_t x = 0; x < 16; ++x) {
            split.at(y, x, x < 8 ? 0 : 2) = 0.8;
            swapped.at(y, x, y < 8 ? 0 : 2) = 0.8;
        }
    EXPECT_GT(structure_distance(split, swapped, b), 0.1);
}

TEST(Evaluate, IdentityEditHasNoStructureChange) {
    const ToyCodec codec;
    const Editor editor = additive_editor({kRedder}, 0.0);
    ToyEmbedder emb;
    const auto report = evaluate(editor, red_pairs(codec, 2), codec, emb, ToyBackbone(), small_eval());
    ASSERT_EQ(report.pairs.size(), 2u);
    ASSERT_TRUE(report.structure_distance);
    EXPECT_EQ(*report.structure_distance, 0.0);
    EXPECT_EQ(report.clip_dir, 0.0);
    EXPECT_EQ(report.views, 4);
    EXPECT_EQ(report.resolution, 32);
    EXPECT_EQ(editor.forward_count(), 2u);
}

TEST(Evaluate, RedderEditMovesTowardRedText) {
    const ToyCodec codec;
    const Editor editor = additive_editor({kRedder}, shift_c());
    ToyEmbedder emb;
    emb.set_color_word("red", 1.0, 0.0, 0.0);
    const auto report = evaluate(editor, red_pairs(codec, 2), codec, emb, ToyBackbone(), small_eval());
    const Editor greener = additive_editor({kRedder}, shift_c(), 2);
    const auto other = evaluate(greener, red_pairs(codec, 2), codec, emb, ToyBackbone(), small_eval());
    EXPECT_GT(report.clip_dir, 0.1);
    EXPECT_GT(report.clip_dir, other.clip_dir + 0.1);
    EXPECT_GT(*report.structure_distance, 0.0);
    EXPECT_EQ(report.embedder_id, "toy-embedder");
    EXPECT_EQ(report.codec_id, codec.id());
    EXPECT_EQ(report.editor_checksum.size(), 16u);
}

TEST(Evaluate, LocalPairsHaveNoStructureDistance) {
    const ToyCodec codec;
    const Editor editor = additive_editor({"Add a hat"}, 0.1);
    Rng rng(1);
    std::vector<EvalPair> pairs{{codec.random_latent(rng), "a", AssetOrigin::Scanned,
                                 EditInstruction::local("Add a hat", "an object with a hat", "hat"), "an object",
                                 "an object with a hat"}};
    const auto report = evaluate(editor, pairs, codec, ToyEmbedder(), ToyBackbone(), small_eval());
    EXPECT_FALSE(report.pairs[0].structure_distance);
    EXPECT_FALSE(report.structure_distance);
}

TEST(Evaluate, WritesReportFiles) {
    TempDir dir;
    const ToyCodec codec;
    const Editor editor = additive_editor({kRedder}, 0.2);
    const auto report = evaluate(editor, red_pairs(codec, 3), codec, ToyEmbedder(), ToyBackbone(), small_eval());
    write_report(dir.path, report);
    for (const char* f : {"report.json", "report.csv", "clip_sim.png", "clip_dir.png", "structure_distance.png"})
        EXPECT_TRUE(std::filesystem::exists(dir.path / f)) << f;
    const auto j = read_json(dir.path / "report.json");
    EXPECT_EQ(j["pairs"].size(), 3u);
    EXPECT_DOUBLE_EQ(j["aggregate"]["clip_sim"].get<double>(), report.clip_sim);
    std::ifstream csv(dir.path / "report.csv");
    std::string header;
    std::getline(csv, header);
    EXPECT_NE(header.find("clip_dir"), std::string::npos);
    EXPECT_EQ(read_png_rgb(dir.path / "clip_sim.png").dim(2), 3u);
}

TEST(Evaluate, LoadEvalSet) {
    TempDir dir;
    const ToyCodec codec;
    Rng rng(5);
    const Latent l = codec.random_latent(rng);
    std::filesystem::create_directories(dir.path / "lat");
    save_latent(dir.path / "lat" / "a.letc", l);
    write_json(dir.path / "set.json",
               nlohmann::json::array({{{"latent", "lat/a.letc"},
                                       {"class_label", "cat"},
                                       {"origin", "scanned"},
                                       {"instruction", EditInstruction::global(kRedder)},
                                       {"source_text", "a cat"},
                                       {"target_text", "a red cat"}}}));
    const auto set = load_eval_set(dir.path / "set.json");
    ASSERT_EQ(set.size(), 1u);
    EXPECT_TRUE(bitwise_equal(set[0].latent.data, l.data));
    EXPECT_EQ(set[0].origin, AssetOrigin::Scanned);
    EXPECT_EQ(set[0].target_text, "a red cat");
    write_json(dir.path / "bad.json", {{"x", 1}});
    EXPECT_THROW(load_eval_set(dir.path / "bad.json"), FormatError);
}

TEST(Evaluate, BarChart) {
    const Tensor c = bar_chart({0.0, 1.0}, 0.0, 1.0, 50, 10);
    EXPECT_EQ(c.dim(0), 50u);
    EXPECT_EQ(c.dim(2), 3u);
}
