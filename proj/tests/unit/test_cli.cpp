// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "latentedit/core/tensor_io.hpp"
#include "latentedit/latent_ops/latent_ops.hpp"

#include "toy_world.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sys/wait.h>

using namespace latentedit;
using namespace latentedit::testing;
using nlohmann::json;

namespace {

    int run_cli(const std::string& args, const std::filesystem::path& log) {
        const std::string cmd = std::string("\"") + LATENTEDIT_CLI_PATH + "\" " + args + " > \"" + log.string() +
                                "\" 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

    json toy_config() {
        return json::parse(R"({
            "codec": {"adapter": "toy"},
            "priors": {"ti2i": {"adapter": "toy-ti2i", "edits": {"make it redder": {"tint": [1.5, 1, 1]}}}},
            "train": {"epochs": 1, "batch_size": 4, "render_resolution": 8, "max_steps": 2, "learning_rate": 0.01},
            "editor": {"hidden": 4},
            "eval": {"views": 2, "render_resolution": 8, "metric_resolution": 16},
            "embedder": {"grid": 2, "color_words": {"red": [1, 0, 0]}}
        })");
    }

} // namespace

TEST(Cli, LatentArithmetic) {
    TempDir dir;
    Rng rng(1);
    const ToyCodec codec;
    const Latent a = codec.random_latent(rng), b = codec.random_latent(rng);
    save_latent(dir.path / "a.letc", a);
    save_latent(dir.path / "b.letc", b);
    const auto log = dir.path / "log.txt";

    ASSERT_EQ(run_cli("latent-op scale --src " + q(dir.path / "a.letc") + " --edit " + q(dir.path / "b.letc") +
                          " --eta 0.5 --out " + q(dir.path / "half.letc"),
                      log),
              0);
    EXPECT_LT(max_abs_diff(load_latent(dir.path / "half.letc").data, (a.data + b.data) * 0.5), 1e-15);

    ASSERT_EQ(run_cli("latent-op extract-vector --src " + q(dir.path / "a.letc") + " --edit " +
                          q(dir.path / "b.letc") + " --instruction x --out " + q(dir.path / "v.letc"),
                      log),
              0);
    ASSERT_EQ(run_cli("latent-op apply-vector --latent " + q(dir.path / "a.letc") + " --vector " +
                          q(dir.path / "v.letc") + " --out " + q(dir.path / "applied.letc"),
                      log),
              0);
    EXPECT_LT(max_abs_diff(load_latent(dir.path / "applied.letc").data, b.data), 1e-14);

    EXPECT_EQ(run_cli("latent-op scale --src " + q(dir.path / "missing.letc") + " --edit " + q(dir.path / "b.letc") +
                          " --eta 1 --out " + q(dir.path / "x.letc"),
                      log),
              1);
    EXPECT_NE(run_cli("latent-op scale --eta 1", log), 0);
}

TEST(Cli, TrainChainEvaluate) {
    TempDir dir;
    const ToyCodec codec;
    Rng rng(2);
    for (const char* cls : {"a", "b"}) {
        std::filesystem::create_directories(dir.path / "data" / cls);
        for (int i = 0; i < 2; ++i)
            save_latent(dir.path / "data" / cls / ("x" + std::to_string(i) + ".letc"), codec.random_latent(rng));
    }
    write_json(dir.path / "config.json", toy_config());
    const auto log = dir.path / "log.txt";

    ASSERT_EQ(run_cli("--config " + q(dir.path / "config.json") + " train --data " + q(dir.path / "data") +
                          " --out " + q(dir.path / "run") + " --prompt \"make it redder\"",
                      log),
              0)
        << std::ifstream(log).rdbuf();
    const auto ckpt = dir.path / "run" / "epoch_0001";
    ASSERT_TRUE(std::filesystem::exists(ckpt / "manifest.json"));
    EXPECT_TRUE(std::filesystem::exists(dir.path / "run" / "metrics.jsonl"));

    save_latent(dir.path / "src.letc", codec.random_latent(rng));
    ASSERT_EQ(run_cli("latent-op chain --ckpt " + q(ckpt) + " --latent " + q(dir.path / "src.letc") +
                          " --prompt \"make it redder\" --prompt \"make it redder\" --out-dir " + q(dir.path / "chain"),
                      log),
              0);
    EXPECT_TRUE(std::filesystem::exists(dir.path / "chain" / "step_2.letc"));

    write_json(dir.path / "eval.json",
               json::array({{{"latent", "src.letc"},
                             {"class_label", "a"},
                             {"instruction", EditInstruction::global(kRedder)},
                             {"source_text", "object"},
                             {"target_text", "red object"}}}));
    ASSERT_EQ(run_cli("--config " + q(dir.path / "config.json") + " evaluate --ckpt " + q(ckpt) + " --eval-set " +
                          q(dir.path / "eval.json") + " --out " + q(dir.path / "report"),
                      log),
              0)
        << std::ifstream(log).rdbuf();
    const json report = read_json(dir.path / "report" / "report.json");
    EXPECT_EQ(report["views"], 2);
    EXPECT_EQ(report["pairs"].size(), 1u);
}

TEST(Cli, UnknownPromptFailsCleanly) {
    TempDir dir;
    const ToyCodec codec;
    Rng rng(3);
    save_latent(dir.path / "src.letc", codec.random_latent(rng));
    save_editor(dir.path / "ckpt", additive_editor({kRedder}, 0.1).params());
    const auto log = dir.path / "log.txt";
    EXPECT_EQ(run_cli("latent-op chain --ckpt " + q(dir.path / "ckpt") + " --latent " + q(dir.path / "src.letc") +
                          " --prompt \"make it bluer\" --out-dir " + q(dir.path / "chain"),
                      log),
              1);
    std::ifstream in(log);
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    EXPECT_NE(text.find("make it bluer"), std::string::npos);
    EXPECT_FALSE(std::filesystem::exists(dir.path / "chain" / "step_0.letc"));
}
