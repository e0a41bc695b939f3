// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "latentedit/core/error.hpp"
#include "latentedit/prior/mask.hpp"

#include "oracles.hpp"
#include "toy_world.hpp"

#include <gtest/gtest.h>

using namespace latentedit;
using namespace latentedit::testing;

namespace {

    std::map<std::string, Tensor> scripted_values() {
        return {{"none", Tensor({2, 2, 3}, 0.0)},
                {"image", Tensor({2, 2, 3}, 1.0)},
                {"image+text", Tensor({2, 2, 3}, 2.0)},
                {"text", Tensor({2, 2, 3}, 3.0)}};
    }

    AttentionStack random_stack(Rng& rng, std::size_t n_maps, std::size_t res = 32) {
        AttentionStack s;
        s.resolution = res;
        for (std::size_t i = 0; i < n_maps; ++i) {
            Tensor m = Tensor::uniform({res, res}, rng, 0.0, 1.0);
            for (std::size_t k = 0; k < m.size(); ++k)
                m[k] = m[k] * m[k] * m[k];
            s.maps.push_back(m);
        }
        return s;
    }

} // namespace

TEST(Guidance, Ti2iCombination) {
    const Tensor out = combine_ti2i(Tensor({1}, 0.0), Tensor({1}, 1.0), Tensor({1}, 2.0),
                                    GuidanceConfig::global_defaults());
    EXPECT_DOUBLE_EQ(out[0], 52.5);
    // All three equal: guidance has no effect.
    const Tensor same = combine_ti2i(Tensor({3}, 0.7), Tensor({3}, 0.7), Tensor({3}, 0.7), {9.0, 4.0, 1.0});
    EXPECT_LT(max_abs_diff(same, Tensor({3}, 0.7)), 1e-15);
    // Unit scales return the fully conditioned prediction.
    EXPECT_DOUBLE_EQ(combine_ti2i(Tensor({1}, 0.3), Tensor({1}, -1.0), Tensor({1}, 4.0), {1.0, 1.0, 1.0})[0], 4.0);
    EXPECT_THROW(combine_ti2i(Tensor({1}), Tensor({2}), Tensor({1}), {}), ShapeError);
}

TEST(Guidance, T2iCombination) {
    EXPECT_DOUBLE_EQ(combine_t2i(Tensor({1}, 1.0), Tensor({1}, 2.0), GuidanceConfig::local_defaults())[0], 51.0);
    EXPECT_DOUBLE_EQ(combine_t2i(Tensor({1}, 1.0), Tensor({1}, 2.0), {1.0, 1.0, 1.0})[0], 2.0);
}

TEST(Guidance, CallCounts) {
    ScriptedPrior ti2i(PriorKind::TI2I, scripted_values());
    ScriptedPrior t2i(PriorKind::T2I, scripted_values());
    CountingPrior a(ti2i), b(t2i);
    const Tensor x({2, 2, 3}, 0.1);
    const auto p = cfg_ti2i(a, x, x, "make it redder", 3, GuidanceConfig::global_defaults());
    EXPECT_EQ(a.predict_calls(), 3);
    EXPECT_DOUBLE_EQ(p.eps_hat[0], 52.5);
    EXPECT_EQ(p.t, 3);
    const auto q = cfg_t2i(b, x, "a red object", 3, {2.5, 7.5, 50.0});
    EXPECT_EQ(b.predict_calls(), 2);
    EXPECT_DOUBLE_EQ(q.eps_hat[0], 150.0);
    EXPECT_THROW(cfg_ti2i(b, x, x, "y", 3, {}), CapabilityError);
}

TEST(Prior, RejectsBadInputs) {
    ScriptedPrior t2i(PriorKind::T2I, scripted_values());
    const Tensor x({2, 2, 3}, 0.1);
    EXPECT_THROW(t2i.predict_noise(x, &x, std::nullopt, 1), CapabilityError);
    Tensor bad = x;
    bad[0] = std::nan("");
    EXPECT_THROW(t2i.predict_noise(bad, nullptr, std::nullopt, 1), InputError);
    EXPECT_THROW(t2i.attention_maps(x, "a red object", "red", 1), CapabilityError);
    PriorHandle h{PriorKind::TI2I, "x", {false, false, false}};
    EXPECT_THROW(h.validate(), CapabilityError);
}

TEST(Prior, TokenMatching) {
    EXPECT_TRUE(text_contains_token("Add a Santa hat to it", "hat"));
    EXPECT_TRUE(text_contains_token("Add a Santa hat to it", "SANTA"));
    EXPECT_FALSE(text_contains_token("Add a Santa hat to it", "ha"));
    auto w = make_toy_world();
    const Tensor img = flat_image(8, 8, 0.3, 0.3, 0.3);
    EXPECT_THROW(w.ti2i->attention_maps(img, kRedder, "hat", 600), TokenError);
    EXPECT_NO_THROW(w.ti2i->attention_maps(img, kRedder, "redder", 600));
}

TEST(ToyPrior, ZeroNoiseAtScaledMean) {
    auto w = make_toy_world(0.05);
    const Tensor src = flat_image(4, 4, 0.4, 0.2, 0.1);
    const auto e = schedule_at(w.ti2i->schedule(), 300);
    const Tensor mu = w.ti2i->mean(src, &src, kRedder);
    EXPECT_NEAR(mu.at(1, 1, 0), 0.6, 1e-15);
    const auto p = w.ti2i->predict_noise(mu * e.alpha, &src, kRedder, 300);
    EXPECT_LT(max_abs(p.eps_hat), 1e-15);
    // Null conditions fall back to the neutral image.
    const auto q = w.ti2i->predict_noise(Tensor({4, 4, 3}, 0.5 * e.alpha), nullptr, std::nullopt, 300);
    EXPECT_LT(max_abs(q.eps_hat), 1e-15);
}

TEST(ToyPrior, OptimalEpsClosedForm) {
    const Tensor x({1}, 2.0), mu({1}, 1.0);
    // sigma (x - alpha mu) / (alpha^2 s^2 + sigma^2) = 0.6 * 1.2 / (0.64 * 0.25 + 0.36)
    EXPECT_NEAR(GaussianToyPrior::optimal_eps(x, mu, 0.8, 0.6, 0.5)[0], 0.72 / 0.52, 1e-14);
}

TEST(ToyPrior, AttentionHighlightsEditedPixels) {
    auto w = make_toy_world();
    Tensor img = flat_image(32, 32, 0.0, 0.0, 0.0);
    for (std::size_t y = 0; y < 8; ++y)
        for (std::size_t x = 0; x < 8; ++x)
            img.at(y, x, 0) = 0.8;
    const auto s = w.ti2i->attention_maps(img, kRedder, "redder", 600);
    ASSERT_FALSE(s.maps.empty());
    EXPECT_EQ(s.resolution, 32u);
    EXPECT_GT(s.maps[0].at(2, 2), 0.0);
    EXPECT_EQ(s.maps[0].at(20, 20), 0.0);
}

TEST(Mask, Extremes) {
    MaskConfig cfg;
    AttentionStack zeros;
    zeros.maps = {Tensor({32, 32}), Tensor({32, 32})};
    const EditMask z = process_attention(zeros, cfg);
    EXPECT_EQ(z.m.shape(), (Shape{128, 128}));
    EXPECT_EQ(max_abs(z.m), 0.0);

    AttentionStack ones;
    ones.maps = {Tensor({32, 32}, 1.0), Tensor({32, 32}, 3.0)};
    const EditMask o = process_attention(ones, cfg);
    EXPECT_LT(max_abs_diff(o.m, Tensor({128, 128}, 1.0)), 1e-12);
}

TEST(Mask, MatchesReferenceExactly) {
    Rng rng(17);
    const MaskConfig cfg;
    for (int trial = 0; trial < 3; ++trial) {
        const AttentionStack s = random_stack(rng, 4);
        const Tensor ref = naive_mask(s.maps, 32, cfg.out_resolution, cfg.threshold, cfg.dilation_px,
                                      cfg.blur_sigma_px);
        EXPECT_EQ(max_abs_diff(process_attention(s, cfg).m, ref), 0.0);
    }
}

TEST(Mask, ValuesInUnitRangeAndValidated) {
    Rng rng(2);
    MaskConfig cfg;
    const EditMask m = process_attention(random_stack(rng, 2), cfg);
    for (double v : m.m.values()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
    EXPECT_THROW(process_attention(random_stack(rng, 1, 16), cfg), InputError);
    AttentionStack neg = random_stack(rng, 1);
    neg.maps[0][5] = -1.0;
    EXPECT_THROW(neg.validate(), InputError);
}

TEST(Mask, BuildingBlocks) {
    Tensor m({5, 5});
    m.at(2, 2) = 1.0;
    const Tensor d = dilate_square(m, 1);
    EXPECT_EQ(sum(d), 9.0);
    EXPECT_EQ(d.at(1, 3), 1.0);
    EXPECT_EQ(d.at(0, 0), 0.0);
    const Tensor t = threshold_map(Tensor({2}, std::vector<double>{0.49, 0.5}), 0.5);
    EXPECT_EQ(t[0], 0.0);
    EXPECT_EQ(t[1], 1.0);
    AttentionStack s;
    s.maps = {Tensor({2, 2}, std::vector<double>{0, 2, 0, 0}), Tensor({2, 2})};
    s.resolution = 2;
    const Tensor avg = average_attention(s);
    EXPECT_EQ(avg[1], 0.5);
}

TEST(Mask, ExtractFromToyPrior) {
    auto w = make_toy_world();
    Tensor img = flat_image(128, 128, 0.0, 0.0, 0.0);
    for (std::size_t y = 40; y < 80; ++y)
        for (std::size_t x = 40; x < 80; ++x)
            img.at(y, x, 0) = 0.6;
    const EditMask m = extract_edit_mask(*w.ti2i, img, kRedder, "redder");
    EXPECT_NEAR(m.m.at(60, 60), 1.0, 1e-12);
    EXPECT_EQ(m.m.at(2, 2), 0.0);
}
