// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "latentedit/core/error.hpp"
#include "latentedit/distill/distill.hpp"

#include "oracles.hpp"
#include "toy_world.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace latentedit;
using namespace latentedit::testing;

namespace {

    struct Views {
        Tensor x_s, x_e, d_s, d_e;
    };

    Views random_views(Rng& rng, std::size_t n = 4) {
        return {Tensor::uniform({n, n, 3}, rng, 0, 1), Tensor::uniform({n, n, 3}, rng, 0, 1),
                Tensor::uniform({n, n}, rng, 2, 6), Tensor::uniform({n, n}, rng, 2, 6)};
    }

    /// Records the step of every prediction.
    class StepRecorder final : public DiffusionPrior {
    public:
        explicit StepRecorder(PriorKind kind)
            : handle_{kind, "rec", {kind == PriorKind::TI2I, false, false}},
              schedule_(NoiseSchedule::linear_sigma(10)) {}
        const PriorHandle& handle() const override { return handle_; }
        const NoiseSchedule& schedule() const override { return schedule_; }
        mutable std::vector<int> steps;
        mutable std::vector<Tensor> inputs;

    protected:
        Tensor do_predict(const Tensor& x_t, const Tensor*, const std::optional<std::string>&, int t) const override {
            steps.push_back(t);
            inputs.push_back(x_t);
            return Tensor(x_t.shape());
        }

    private:
        PriorHandle handle_;
        NoiseSchedule schedule_;
    };

} // namespace

TEST(Regularizers, GlobalValueAndGradient) {
    Rng rng(1);
    const Views v = random_views(rng);
    double ref = 0.0;
    for (std::size_t i = 0; i < v.d_e.size(); ++i)
        ref += (v.d_e[i] - v.d_s[i]) * (v.d_e[i] - v.d_s[i]);
    EXPECT_NEAR(loss_reg_global(v.d_e, v.d_s), ref / 16.0, 1e-14);
    const Tensor fd = central_difference([&](const Tensor& d) { return loss_reg_global(d, v.d_s); }, v.d_e, 1e-5);
    EXPECT_LT(relative_error(loss_reg_global_grad(v.d_e, v.d_s), fd), 1e-8);
    EXPECT_EQ(loss_reg_global(v.d_s, v.d_s), 0.0);
}

TEST(Regularizers, LocalValueAndGradient) {
    Rng rng(2);
    const Views v = random_views(rng);
    const EditMask mask{Tensor::uniform({4, 4}, rng, 0, 1)};
    const LossWeights w;
    const auto r = loss_reg_local(v.x_s, v.x_e, v.d_s, v.d_e, mask, w);
    const Tensor fx = central_difference(
        [&](const Tensor& x) { return loss_reg_local(v.x_s, x, v.d_s, v.d_e, mask, w).value; }, v.x_e, 1e-5);
    const Tensor fd = central_difference(
        [&](const Tensor& d) { return loss_reg_local(v.x_s, v.x_e, v.d_s, d, mask, w).value; }, v.d_e, 1e-5);
    EXPECT_LT(relative_error(r.d_image, fx), 1e-8);
    EXPECT_LT(relative_error(r.d_depth, fd), 1e-8);
}

TEST(Regularizers, MaskExtremes) {
    Rng rng(3);
    const Views v = random_views(rng);
    const LossWeights w;
    const auto full = loss_reg_local(v.x_s, v.x_e, v.d_s, v.d_e, {Tensor({4, 4}, 1.0)}, w);
    EXPECT_EQ(full.value, 0.0);
    EXPECT_EQ(max_abs(full.d_image), 0.0);
    LossWeights depth_only = w;
    depth_only.lambda_photo = 0.0;
    depth_only.lambda_depth = 1.0;
    const auto none = loss_reg_local(v.x_s, v.x_e, v.d_s, v.d_e, {Tensor({4, 4})}, depth_only);
    EXPECT_NEAR(none.value, loss_reg_global(v.d_e, v.d_s), 1e-14);
}

TEST(Regularizers, RejectsBadMask) {
    Rng rng(4);
    const Views v = random_views(rng);
    EXPECT_THROW(loss_reg_local(v.x_s, v.x_e, v.d_s, v.d_e, {Tensor({4, 4}, 1.5)}, {}), InputError);
    EXPECT_THROW(loss_reg_local(v.x_s, v.x_e, v.d_s, v.d_e, {Tensor({3, 4})}, {}), ShapeError);
}

TEST(Sds, ResidualOfGuidedPrediction) {
    const NoisePrediction p{Tensor({2}, std::vector<double>{1.0, 3.0}), 5};
    EXPECT_EQ(sds_grad(p, Tensor({2}, 1.0)), Tensor({2}, std::vector<double>{0.0, 2.0}));
    EXPECT_THROW(sds_grad(p, Tensor({3})), ShapeError);
}

TEST(Sds, GlobalGradientUsesGuidedPrior) {
    ScriptedPrior prior(PriorKind::TI2I, {{"none", Tensor({4, 4, 3}, 0.0)},
                                          {"image", Tensor({4, 4, 3}, 1.0)},
                                          {"image+text", Tensor({4, 4, 3}, 2.0)}});
    Rng rng(5);
    const Views v = random_views(rng);
    const Tensor eps({4, 4, 3}, 0.5);
    LossWeights w;
    w.lambda_ti2i = 2.0;
    const auto b = global_edit_gradients(prior, v.x_s, v.x_e, v.d_s, v.d_e, "y", 4, eps,
                                         GuidanceConfig::global_defaults(), w);
    EXPECT_DOUBLE_EQ(b.d_image[0], 2.0 * 52.0);
    EXPECT_LT(max_abs_diff(b.d_depth, loss_reg_global_grad(v.d_e, v.d_s) * 5.0), 1e-15);
    EXPECT_TRUE(b.diagnostics.count("sds_ti2i"));
    EXPECT_TRUE(b.diagnostics.count("reg_global"));

    const auto weighted = global_edit_gradients(prior, v.x_s, v.x_e, v.d_s, v.d_e, "y", 4, eps,
                                                GuidanceConfig::global_defaults(), w, {}, [](int t) { return 0.25 * t; });
    EXPECT_DOUBLE_EQ(weighted.d_image[0], 2.0 * 52.0);
}

TEST(Sds, TogglesRemoveTerms) {
    ScriptedPrior prior(PriorKind::TI2I, {{"none", Tensor({4, 4, 3}, 0.0)},
                                          {"image", Tensor({4, 4, 3}, 1.0)},
                                          {"image+text", Tensor({4, 4, 3}, 2.0)}});
    CountingPrior counted(prior);
    Rng rng(6);
    const Views v = random_views(rng);
    const Tensor eps({4, 4, 3});
    const auto b = global_edit_gradients(counted, v.x_s, v.x_e, v.d_s, v.d_e, "y", 4, eps, {}, {},
                                         LossToggles{false, true, true, true});
    EXPECT_EQ(counted.predict_calls(), 0);
    EXPECT_EQ(max_abs(b.d_image), 0.0);
    EXPECT_FALSE(b.diagnostics.count("sds_ti2i"));
    const auto c = global_edit_gradients(counted, v.x_s, v.x_e, v.d_s, v.d_e, "y", 4, eps, {}, {},
                                         LossToggles{true, true, false, true});
    EXPECT_EQ(max_abs(c.d_depth), 0.0);
    EXPECT_FALSE(c.diagnostics.count("reg_global"));
}

TEST(Sds, LocalQueriesBothPriorsAtSameStep) {
    StepRecorder ti2i(PriorKind::TI2I), t2i(PriorKind::T2I);
    Rng rng(7);
    const Views v = random_views(rng);
    const Tensor eps = Tensor::randn({4, 4, 3}, rng);
    const EditMask mask{Tensor({4, 4}, 0.5)};
    const auto b = local_edit_gradients(ti2i, t2i, v.x_s, v.x_e, v.d_s, v.d_e, "Add a hat",
                                        std::string("a cat with a hat"), &mask, 6, eps,
                                        GuidanceConfig::local_defaults(), {});
    ASSERT_EQ(ti2i.steps.size(), 3u);
    ASSERT_EQ(t2i.steps.size(), 2u);
    for (int t : ti2i.steps)
        EXPECT_EQ(t, 6);
    for (int t : t2i.steps)
        EXPECT_EQ(t, 6);
    EXPECT_EQ(ti2i.inputs[0], t2i.inputs[0]);
    EXPECT_EQ(b.diagnostics.size(), 3u);
    EXPECT_TRUE(b.finite());
}

TEST(Sds, LocalRequiresDescriptionAndMask) {
    StepRecorder ti2i(PriorKind::TI2I), t2i(PriorKind::T2I);
    Rng rng(8);
    const Views v = random_views(rng);
    const Tensor eps({4, 4, 3});
    const EditMask mask{Tensor({4, 4})};
    EXPECT_THROW(local_edit_gradients(ti2i, t2i, v.x_s, v.x_e, v.d_s, v.d_e, "y", std::nullopt, &mask, 3, eps, {}, {}),
                 InstructionError);
    EXPECT_THROW(local_edit_gradients(ti2i, t2i, v.x_s, v.x_e, v.d_s, v.d_e, "y", std::string("t"), nullptr, 3, eps,
                                      {}, {}),
                 InstructionError);
    // Without the mask toggle the regularizer covers everything and no mask is needed.
    LossToggles no_mask;
    no_mask.mask = false;
    const auto b = local_edit_gradients(ti2i, t2i, v.x_s, v.x_e, v.d_s, v.d_e, "y", std::string("t"), nullptr, 3,
                                        eps, {}, {}, no_mask);
    const auto ref = loss_reg_local(v.x_s, v.x_e, v.d_s, v.d_e, {Tensor({4, 4})}, LossWeights{});
    EXPECT_DOUBLE_EQ(b.diagnostics.at("reg_local"), ref.value);
}

TEST(Timesteps, RangeAndEndpoints) {
    Rng rng(9);
    int lo = 1 << 30, hi = -1;
    for (int i = 0; i < 200000; ++i) {
        const int t = sample_timestep(rng, 1024);
        lo = std::min(lo, t);
        hi = std::max(hi, t);
    }
    EXPECT_EQ(lo, 21);
    EXPECT_EQ(hi, 1003);
    EXPECT_THROW(sample_timestep(rng, 0), ConfigError);
    EXPECT_THROW(sample_timestep(rng, 10, 0.51, 0.59), ConfigError);
}

TEST(Metrics, SinkWritesJsonLines) {
    std::ostringstream out;
    MetricsSink sink(&out);
    sink.record(3, 1, 500, {{"sds_ti2i", 0.5}, {"reg_global", std::nan("")}});
    sink.record(4, 1, 20, {});
    EXPECT_EQ(sink.records(), 2);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["step"], 3);
    EXPECT_EQ(j["t"], 500);
    EXPECT_TRUE(j["reg_global"].is_null());
}

TEST(Regularizers, UnitDepthOffset) {
    const Tensor d_s({4, 4}, 3.0);
    EXPECT_EQ(loss_reg_global(d_s + Tensor({4, 4}, 1.0), d_s), 1.0);
}

TEST(Sds, PerfectPredictionGivesZeroBundle) {
    const Tensor eps({4, 4, 3}, 0.3);
    ScriptedPrior prior(PriorKind::TI2I, {{"none", eps}, {"image", eps}, {"image+text", eps}});
    Rng rng(10);
    const Views v = random_views(rng);
    const auto b = global_edit_gradients(prior, v.x_s, v.x_s, v.d_s, v.d_s, "y", 4, eps,
                                         GuidanceConfig::global_defaults(), {});
    EXPECT_EQ(max_abs(b.d_image), 0.0);
    EXPECT_EQ(max_abs(b.d_depth), 0.0);
}
