// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

// Prints one PASS/FAIL line per acceptance criterion; exits non-zero on any failure.

#include "latentedit/core/error.hpp"
#include "latentedit/distill/distill.hpp"
#include "latentedit/eval/evaluate.hpp"
#include "latentedit/latent_ops/latent_ops.hpp"
#include "latentedit/prior/mask.hpp"
#include "latentedit/service/session.hpp"

#include "oracles.hpp"
#include "toy_world.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

using namespace latentedit;
using namespace latentedit::testing;

namespace {

    struct Outcome {
        bool pass = false;
        std::string detail;
    };

    using Clock = std::chrono::steady_clock;

    double seconds_since(Clock::time_point start) {
        return std::chrono::duration<double>(Clock::now() - start).count();
    }

    std::string fmt(const char* f, double a) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), f, a);
        return buf;
    }

    // SDS: Monte-Carlo mean of the gradient vs. the closed-form expectation
    // E_t[sigma alpha (x - mu) / (alpha^2 s^2 + sigma^2)] over the sampled step range.
    Outcome sds_gradient() {
        const auto start = Clock::now();
        const double s = 0.1;
        auto world = make_toy_world(s);
        const auto& prior = *world.ti2i;
        Rng rng(123);
        const Tensor x_s = Tensor::uniform({2, 2, 3}, rng, 0.1, 0.6);
        const Tensor x_e = Tensor::uniform({2, 2, 3}, rng, 0.1, 0.9);
        const Tensor d({2, 2}, 4.0);
        const Tensor mu = prior.mean(x_e, &x_s, kRedder);

        LossToggles toggles;
        toggles.reg = false;
        const GuidanceConfig unit{1.0, 1.0, 1.0};
        const int n = 10000;
        Tensor sum1(x_e.shape()), sum2(x_e.shape());
        for (int i = 0; i < n; ++i) {
            const int t = sample_timestep(rng, prior.schedule().steps());
            const Tensor eps = Tensor::randn(x_e.shape(), rng);
            const auto b = global_edit_gradients(prior, x_s, x_e, d, d, kRedder, t, eps, unit, LossWeights{}, toggles);
            for (std::size_t k = 0; k < sum1.size(); ++k) {
                sum1[k] += b.d_image[k];
                sum2[k] += b.d_image[k] * b.d_image[k];
            }
        }

        const auto& alphas = prior.schedule().alphas();
        const auto& sigmas = prior.schedule().sigmas();
        const int steps = prior.schedule().steps();
        const int lo = static_cast<int>(std::ceil(0.02 * steps)), hi = static_cast<int>(std::floor(0.98 * steps));
        double coeff = 0.0;
        for (int t = lo; t <= hi; ++t)
            coeff += sigmas[t] * alphas[t] / (alphas[t] * alphas[t] * s * s + sigmas[t] * sigmas[t]);
        coeff /= (hi - lo + 1);

        double worst = 0.0;
        for (std::size_t k = 0; k < sum1.size(); ++k) {
            const double mean = sum1[k] / n;
            const double var = (sum2[k] - n * mean * mean) / (n - 1);
            const double se = std::sqrt(var / n);
            const double expected = coeff * (x_e[k] - mu[k]);
            worst = std::max(worst, std::abs(mean - expected) / se);
        }
        const double secs = seconds_since(start);
        return {worst < 3.0 && secs < 30.0,
                "max |mean - analytic| = " + fmt("%.2f", worst) + " SE over 12 components, " + fmt("%.1f", secs) +
                    " s"};
    }

    Outcome regularizer_gradients() {
        const auto start = Clock::now();
        Rng rng(7);
        const Tensor x_s = Tensor::uniform({4, 4, 3}, rng, 0, 1), x_e = Tensor::uniform({4, 4, 3}, rng, 0, 1);
        const Tensor d_s = Tensor::uniform({4, 4}, rng, 2, 6), d_e = Tensor::uniform({4, 4}, rng, 2, 6);
        const EditMask mask{Tensor::uniform({4, 4}, rng, 0, 1)};
        const LossWeights w;

        const Tensor g_global = loss_reg_global_grad(d_e, d_s);
        const Tensor fd_global =
            central_difference([&](const Tensor& d) { return loss_reg_global(d, d_s); }, d_e, 1e-5);
        const auto local = loss_reg_local(x_s, x_e, d_s, d_e, mask, w);
        const Tensor fd_img = central_difference(
            [&](const Tensor& x) { return loss_reg_local(x_s, x, d_s, d_e, mask, w).value; }, x_e, 1e-5);
        const Tensor fd_depth = central_difference(
            [&](const Tensor& d) { return loss_reg_local(x_s, x_e, d_s, d, mask, w).value; }, d_e, 1e-5);
        const double err = std::max({relative_error(g_global, fd_global), relative_error(local.d_image, fd_img),
                                     relative_error(local.d_depth, fd_depth)});
        const double secs = seconds_since(start);
        return {err < 1e-6 && secs < 5.0, "max relative error " + fmt("%.2e", err) + ", " + fmt("%.3f", secs) + " s"};
    }

    Outcome cfg_algebra() {
        std::vector<std::string> bad;
        auto check = [&](bool ok, const char* what) {
            if (!ok)
                bad.push_back(what);
        };
        const Shape sh{1, 1, 3};
        ScriptedPrior ti2i(PriorKind::TI2I, {{"none", Tensor(sh, 0.0)}, {"image", Tensor(sh, 1.0)},
                                             {"image+text", Tensor(sh, 2.0)}, {"text", Tensor(sh, 0.0)}});
        CountingPrior c1(ti2i);
        const Tensor x(sh, 0.2);
        const auto p = cfg_ti2i(c1, x, x, "y", 5, GuidanceConfig::global_defaults());
        check(p.eps_hat == Tensor(sh, 52.5), "52.5 case");
        check(c1.predict_calls() == 3, "ti2i call count");

        ScriptedPrior same(PriorKind::TI2I, {{"none", Tensor(sh, 0.7)}, {"image", Tensor(sh, 0.7)},
                                             {"image+text", Tensor(sh, 0.7)}});
        check(cfg_ti2i(same, x, x, "y", 5, {9.0, 4.0, 1.0}).eps_hat == Tensor(sh, 0.7), "equal predictions");
        check(cfg_ti2i(ti2i, x, x, "y", 5, {1.0, 1.0, 1.0}).eps_hat == Tensor(sh, 2.0), "unit scales");

        ScriptedPrior t2i(PriorKind::T2I, {{"none", Tensor(sh, 1.0)}, {"text", Tensor(sh, 3.0)}});
        CountingPrior c2(t2i);
        check(cfg_t2i(c2, x, "a thing", 5, {2.5, 7.5, 50.0}).eps_hat == Tensor(sh, 101.0), "t2i value");
        check(c2.predict_calls() == 2, "t2i call count");
        ScriptedPrior t2i_same(PriorKind::T2I, {{"none", Tensor(sh, 1.5)}, {"text", Tensor(sh, 1.5)}});
        check(cfg_t2i(t2i_same, x, "a thing", 5, {2.5, 7.5, 33.0}).eps_hat == Tensor(sh, 1.5), "t2i equal");
        check(cfg_t2i(t2i, x, "a thing", 5, {2.5, 7.5, 1.0}).eps_hat == Tensor(sh, 3.0), "t2i unit scale");

        std::string detail = "52.5 case, reductions exact; calls " + std::to_string(c1.predict_calls()) + " and " +
                             std::to_string(c2.predict_calls());
        for (const auto& b : bad)
            detail += "; mismatch: " + b;
        return {bad.empty(), detail};
    }

    // Prior that hands back a preset attention stack.
    class FixedAttentionPrior final : public DiffusionPrior {
    public:
        FixedAttentionPrior()
            : handle_{PriorKind::TI2I, "fixed-attention", {true, true, true}},
              schedule_(NoiseSchedule::shap_e_compatible()) {}
        const PriorHandle& handle() const override { return handle_; }
        const NoiseSchedule& schedule() const override { return schedule_; }
        AttentionStack stack;

    protected:
        Tensor do_predict(const Tensor& x_t, const Tensor*, const std::optional<std::string>&, int) const override {
            return Tensor(x_t.shape());
        }
        AttentionStack do_attention(const Tensor&, const std::string&, const std::string&, int t) const override {
            AttentionStack s = stack;
            s.t = t;
            return s;
        }

    private:
        PriorHandle handle_;
        NoiseSchedule schedule_;
    };

    Outcome mask_oracle() {
        const auto start = Clock::now();
        FixedAttentionPrior prior;
        const MaskConfig cfg;
        Rng rng(2024);
        const Tensor img = flat_image(8, 8, 0.5, 0.5, 0.5);
        int exact = 0;
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            AttentionStack s;
            s.resolution = 32;
            const int maps = 1 + trial % 4;
            for (int m = 0; m < maps; ++m) {
                Tensor a = Tensor::uniform({32, 32}, rng, 0.0, 1.0);
                // Sparse peaks so threshold, dilation and blur all matter.
                for (std::size_t k = 0; k < a.size(); ++k)
                    a[k] = std::pow(a[k], 4.0);
                s.maps.push_back(a);
            }
            prior.stack = s;
            const EditMask got = extract_edit_mask(prior, img, "Add a Santa hat to it", "hat", cfg);
            const Tensor ref = naive_mask(s.maps, 32, cfg.out_resolution, cfg.threshold, cfg.dilation_px,
                                          cfg.blur_sigma_px);
            const double diff = max_abs_diff(got.m, ref);
            worst = std::max(worst, diff);
            exact += diff == 0.0;
        }
        const double secs = seconds_since(start);
        return {exact == 20 && secs < 10.0, std::to_string(exact) + "/20 stacks pixel-exact (max diff " +
                                                fmt("%.1e", worst) + "), " + fmt("%.1f", secs) + " s"};
    }

    Outcome zero_init() {
        Rng rng(31);
        const LatentShape shape{27, 4};
        const BaseDenoiser base = BaseDenoiser::random(shape, 16, rng, 0.3);
        const std::vector<std::string> instr{kRedder, kGreener, "Make it look like made of gold"};
        const Editor editor(init_from_pretrained(base, shape, instr));
        double worst = 0.0;
        for (int i = 0; i < 8; ++i) {
            const Latent r{Tensor::randn(shape.as_shape(), rng, 0.4), "toy-blobs"};
            const StackedInput in = stack_input(r, Tensor::randn(shape.as_shape(), rng), editor.schedule(),
                                                kDefaultEditorTau);
            for (std::size_t k = 0; k < instr.size(); ++k)
                worst = std::max(worst, max_abs_diff(editor.forward(in, k), base.forward(in.noised, instr[k])));
        }
        return {worst == 0.0, "max abs diff " + fmt("%g", worst) + " over 8 latents x 3 instructions"};
    }

    // Editor trained on the shift task; shared by the convergence, feed-forward and replay checks.
    struct Trained {
        ToyWorld world = make_toy_world();
        Editor editor{init_from_pretrained(BaseDenoiser::identity({27, 4}, 16), {27, 4}, {kRedder})};
        double train_seconds = 0.0;
        long steps = 0;
    };

    Outcome toy_convergence(Trained& tr) {
        const double c = shift_c();
        const ToyCodec& codec = tr.world.codec;
        const PriorSet priors{tr.world.ti2i.get(), nullptr};

        auto start = Clock::now();
        const TrainConfig cfg = toy_train_config();
        const TrainingDataset data = toy_shift_dataset(codec, {kRedder});
        const TrainResult r = train(cfg, data, tr.editor, codec, priors, {EditInstruction::global(kRedder)});
        tr.train_seconds = seconds_since(start);
        tr.steps = r.steps;

        // Held-out latents never seen in training.
        Rng held(4242);
        double held_err = 0.0;
        std::vector<Latent> held_out;
        for (int i = 0; i < 16; ++i) {
            held_out.push_back(codec.random_latent(held));
            const Latent e = tr.editor.edit(held_out.back(), kRedder, std::uint64_t{7});
            held_err = std::max(held_err, shift_error(held_out.back().data, e.data, c));
        }

        start = Clock::now();
        TrainConfig tto = toy_train_config();
        tto.learning_rate = 3e-2;
        tto.batch_size = 8;
        tto.epochs = 150;
        tto.anneal = AnnealConfig{};
        Rng src_rng(5);
        const Latent src = codec.random_latent(src_rng);
        const Latent opt = test_time_optimize(src, EditInstruction::global(kRedder), codec, priors, 600, tto);
        const double tto_err = shift_error(src.data, opt.data, c);
        const double tto_seconds = seconds_since(start);

        // Edit vector from 8 pairs, transferred to the held-out latents.
        Rng vec_rng(77);
        std::vector<std::pair<Latent, Latent>> pairs;
        for (int i = 0; i < 8; ++i) {
            const Latent s = codec.random_latent(vec_rng);
            pairs.emplace_back(s, tr.editor.edit(s, kRedder, std::uint64_t{11 + i}));
        }
        const EditVector v = extract_edit_vector(pairs, kRedder);
        const double vec_err = max_abs_diff(v.delta, shifted(Tensor(v.delta.shape()), c)) / c;
        double transfer_err = 0.0;
        for (const auto& h : held_out)
            transfer_err = std::max(transfer_err, shift_error(h.data, apply_edit_vector(h, v).data, c));

        const double total = tr.train_seconds + tto_seconds;
        const bool ok = r.steps <= 2000 && held_err < 0.05 && tto_err < 0.05 && vec_err < 0.05 &&
                        transfer_err < 0.05 && total < 600.0;
        std::ostringstream os;
        os << "train " << r.steps << " steps held-out err " << fmt("%.4f", held_err) << ", tto err "
           << fmt("%.4f", tto_err) << ", edit vector err " << fmt("%.4f", vec_err) << ", transfer err "
           << fmt("%.4f", transfer_err) << ", " << fmt("%.0f", total) << " s";
        return {ok, os.str()};
    }

    Outcome schedules() {
        const TrainConfig s = TrainConfig::single_prompt();
        TrainConfig w = s;
        w.warmup_epochs = 10;
        const bool anneal = anneal_max_timestep(99, s) == 0.98 && anneal_max_timestep(110, s) == 0.784 &&
                            anneal_max_timestep(120, s) == 0.6272;
        const bool warm = photometric_warmup(0, w) == 0.0 && photometric_warmup(10, w) == 1.25 &&
                          photometric_warmup(5, w) == 0.625 && photometric_warmup(0, s) == 0.0 &&
                          photometric_warmup(s.effective_warmup_epochs(), s) == 1.25;
        return {anneal && warm, "anneal " + fmt("%.4f", anneal_max_timestep(99, s)) + " -> " +
                                    fmt("%.4f", anneal_max_timestep(110, s)) + " -> " +
                                    fmt("%.4f", anneal_max_timestep(120, s)) + ", warm-up 0 -> 0.625 -> 1.25"};
    }

    Outcome metric_pinning() {
        std::vector<std::string> bad;
        auto check = [&](bool ok, const char* what) {
            if (!ok)
                bad.push_back(what);
        };
        auto vec = [](std::vector<double> v) {
            const std::size_t n = v.size();
            return Tensor({n}, std::move(v));
        };
        auto keyed = [](double k) { return flat_image(2, 2, k, 0.0, 0.0); };
        const double r2 = 1.0 / std::sqrt(2.0);

        TableEmbedder e;
        e.images = {{0.1, vec({0.3, -1.2, 2.0})}, {0.2, vec({1, 0, 0})}, {0.3, vec({1, 1, 0})},
                    {0.4, vec({2, 0, 0})}};
        e.texts = {{"same", vec({0.3, -1.2, 2.0})}, {"ortho", vec({0, 0, 5})}, {"src", vec({0, 0, 0})},
                   {"dir", vec({0, 1, 0})}, {"diag", vec({r2, r2, 0})}, {"x", vec({1, 0, 0})}};
        check(clip_sim({keyed(0.1)}, "same", e) == 1.0, "clip_sim identical");
        check(clip_sim({keyed(0.2)}, "ortho", e) == 0.0, "clip_sim orthogonal");
        check(clip_dir({keyed(0.2)}, {keyed(0.2)}, "src", "x", e) == 0.0, "clip_dir unchanged");
        check(clip_dir({keyed(0.2)}, {keyed(0.3)}, "src", "dir", e) == 1.0, "clip_dir aligned");
        const double diag = clip_dir({keyed(0.2)}, {keyed(0.4)}, "src", "diag", e);
        check(std::abs(diag - 0.7071) < 5e-5, "clip_dir 0.7071");

        TableBackbone b;
        b.descriptors = {{0.1, vec({0.2, 0.9, 0.4})}, {0.2, vec({1, 0, 0})}, {0.3, vec({0, 1, 0})}};
        check(structure_distance(keyed(0.1), keyed(0.1), b) == 0.0, "structure identical");
        check(structure_distance(keyed(0.2), keyed(0.3), b) == 1.0, "structure orthogonal");
        const ToyBackbone toy_backbone;
        Rng rng(1);
        const Tensor img = Tensor::uniform({32, 32, 3}, rng, 0, 1);
        check(structure_distance(img, img, toy_backbone) == 0.0, "toy backbone identical");

        // Full toy report: 20 pairs (3 global + 2 local instructions over objects), 20 views at 256x256.
        const auto start = Clock::now();
        const ToyCodec codec;
        const std::vector<EditInstruction> instr{
            EditInstruction::global("Make it look like made of gold"), EditInstruction::global("Make it look like a tiger"),
            EditInstruction::global("Make its color look like rainbow"),
            EditInstruction::local("Add a Santa hat to it", "an object wearing a Santa hat", "hat"),
            EditInstruction::local("Make it wear a blue sweater", "an object wearing a blue sweater", "sweater")};
        std::vector<std::string> texts;
        for (const auto& y : instr)
            texts.push_back(y.text);
        const Editor editor = additive_editor(texts, 0.2);
        std::vector<EvalPair> pairs;
        Rng obj(9);
        for (int i = 0; i < 20; ++i)
            pairs.push_back({codec.random_latent(obj), "object", AssetOrigin::Scanned, instr[i % 5], "an object",
                             instr[i % 5].target_description.value_or("a golden object")});
        ToyEmbedder emb;
        emb.set_color_word("golden", 1.0, 0.8, 0.1);
        const EvalReport report = evaluate(editor, pairs, codec, emb, toy_backbone, EvalConfig{});
        const double secs = seconds_since(start);
        const bool finite = std::isfinite(report.clip_sim) && std::isfinite(report.clip_dir) &&
                            report.structure_distance && std::isfinite(*report.structure_distance);
        check(finite && report.pairs.size() == 20 && report.views == 20 && report.resolution == 256,
              "toy report complete");
        check(secs < 60.0, "toy report time");

        std::string detail = "pinned cases exact (0.7071 case " + fmt("%.6f", diag) + "), toy report 20 pairs x 20 views in " +
                             fmt("%.1f", secs) + " s";
        for (const auto& x : bad)
            detail += "; mismatch: " + x;
        return {bad.empty(), detail};
    }

    Outcome feed_forward(const Trained& tr) {
        TempDir dir;
        ServiceConfig cfg;
        cfg.data_dir = dir.path;
        cfg.turntable_frames = 4;
        cfg.turntable_resolution = 32;
        SessionManager sm(tr.editor, tr.world.codec, cfg);
        Rng rng(55);
        SessionSource src;
        src.latent = tr.world.codec.random_latent(rng);
        const std::string id = sm.create(src).session_id;
        bool ok = true;
        std::string counts;
        for (double eta : {1.0, 0.5, 1.5}) {
            const auto before = tr.editor.forward_count();
            const auto start = Clock::now();
            sm.apply_edit(id, kRedder, eta);
            const auto calls = tr.editor.forward_count() - before;
            ok = ok && calls == 1;
            counts += (counts.empty() ? "" : ", ") + std::to_string(calls) + " (" +
                      fmt("%.0f", 1000.0 * seconds_since(start)) + " ms)";
        }
        return {ok, "editor forward passes per apply_edit: " + counts};
    }

    Outcome session_replay(const Trained& tr) {
        TempDir dir;
        ServiceConfig cfg;
        cfg.data_dir = dir.path;
        cfg.inference_seed = 17;
        std::string id;
        Latent head;
        {
            SessionManager sm(tr.editor, tr.world.codec, cfg);
            Rng rng(66);
            SessionSource src;
            src.latent = tr.world.codec.random_latent(rng);
            id = sm.create(src).session_id;
            sm.apply_edit(id, kRedder, 1.0, false);
            sm.apply_edit(id, kRedder, 0.6, false);
            sm.apply_edit(id, kRedder, 1.2, false);
            sm.set_strength(id, 1, 0.3);
            head = sm.head_latent(id);
        }
        SessionManager restarted(tr.editor, tr.world.codec, cfg);
        const Latent replayed = restarted.replay(id);
        const bool ok = restarted.get(id).edits.size() == 3 && bitwise_equal(replayed.data, head.data) &&
                        bitwise_equal(restarted.head_latent(id).data, head.data);
        return {ok, "3-edit session replayed after restart: " +
                        std::string(bitwise_equal(replayed.data, head.data) ? "bitwise equal" : "differs")};
    }

} // namespace

int main() {
    int failures = 0;
    auto report = [&](const char* name, const std::function<Outcome()>& fn) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
    };

    Trained trained;
    report("sds_gradient_monte_carlo", sds_gradient);
    report("regularizer_gradients", regularizer_gradients);
    report("cfg_algebra", cfg_algebra);
    report("mask_pipeline_oracle", mask_oracle);
    report("zero_init_equivalence", zero_init);
    report("toy_end_to_end_convergence", [&] { return toy_convergence(trained); });
    report("schedules", schedules);
    report("metric_pinning", metric_pinning);
    report("feed_forward_contract", [&] { return feed_forward(trained); });
    report("session_replay", [&] { return session_replay(trained); });
    return failures == 0 ? 0 : 1;
}
