// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "latentedit/codec/geometry_io.hpp"
#include "latentedit/codec/toy_codec.hpp"
#include "latentedit/core/config.hpp"
#include "latentedit/core/error.hpp"
#include "latentedit/core/tensor_io.hpp"
#include "latentedit/eval/evaluate.hpp"
#include "latentedit/latent_ops/latent_ops.hpp"
#include "latentedit/plugins/adapters.hpp"
#include "latentedit/service/http.hpp"
#include "latentedit/trainer/trainer.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>

using namespace latentedit;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

    json section(const AppConfig& app, const char* name) {
        return app.extra.contains(name) ? app.extra[name] : json::object();
    }

    std::optional<fs::path> opt_path(const std::string& s) {
        return s.empty() ? std::nullopt : std::optional<fs::path>(s);
    }

    std::vector<EditInstruction> instruction_catalog(const AppConfig& app) {
        std::vector<EditInstruction> out;
        if (app.extra.contains("instructions"))
            out = app.extra["instructions"].get<std::vector<EditInstruction>>();
        return out;
    }

    EditInstruction find_instruction(const AppConfig& app, const std::string& text) {
        for (const auto& y : instruction_catalog(app))
            if (y.text == text)
                return y;
        return EditInstruction::global(text);
    }

    struct Priors {
        std::unique_ptr<DiffusionPrior> ti2i, t2i;
        PriorSet set() const { return {ti2i.get(), t2i.get()}; }
    };

    Priors make_priors(const AppConfig& app) {
        const json spec = section(app, "priors");
        const NoiseSchedule schedule = app.schedule.build();
        Priors p;
        if (spec.contains("ti2i"))
            p.ti2i = make_prior(spec["ti2i"], schedule);
        if (spec.contains("t2i"))
            p.t2i = make_prior(spec["t2i"], schedule);
        return p;
    }

    std::unique_ptr<Codec> codec_from(const AppConfig& app) { return make_codec(section(app, "codec")); }

    // A codec given on the command line: "toy", or a JSON spec file.
    std::unique_ptr<Codec> codec_from_arg(const std::string& arg, const AppConfig& app) {
        if (arg.empty())
            return codec_from(app);
        if (arg == "toy")
            return make_codec(json{{"adapter", "toy"}});
        return make_codec(read_json(arg));
    }

    BaseDenoiser base_denoiser(const json& spec, const LatentShape& shape) {
        const std::size_t hidden = spec.value("hidden", std::size_t{16});
        const std::string base = spec.value("base", "identity");
        if (base == "identity")
            return BaseDenoiser::identity(shape, hidden);
        BaseDenoiser b{shape, 0, read_tensor_container(base)};
        auto it = b.weights.find("w1");
        if (it == b.weights.end() || it->second.ndim() != 2)
            throw FormatError("base denoiser '" + base + "' has no 2-D 'w1'");
        b.hidden = it->second.dim(0);
        return b;
    }

    AssetOrigin parse_origin(const std::string& s) {
        if (s == "scanned")
            return AssetOrigin::Scanned;
        if (s == "generated")
            return AssetOrigin::Generated;
        throw FormatError("unknown asset origin '" + s + "'");
    }

    // <dir>/dataset.json lists entries; otherwise every .letc/.ply/.obj file is an entry
    // labelled with the name of its parent directory.
    TrainingDataset load_data_dir(const fs::path& dir, const AppConfig& app, const std::vector<std::string>& texts) {
        std::vector<DatasetEntry> entries;
        auto add_file = [&](const fs::path& p, DatasetEntry e) {
            const auto ext = p.extension().string();
            if (ext == ".letc")
                e.latent = load_latent(p);
            else if (ext == ".ply" || ext == ".obj")
                e.asset = load_asset(p, e.class_label, e.instance_id);
            else
                throw FormatError("unsupported data file '" + p.string() + "'");
            entries.push_back(std::move(e));
        };
        if (fs::exists(dir / "dataset.json")) {
            for (const auto& j : read_json(dir / "dataset.json")) {
                DatasetEntry e;
                e.class_label = j.at("class_label").get<std::string>();
                e.instance_id = j.value("instance_id", "");
                e.origin = parse_origin(j.value("origin", "generated"));
                if (j.contains("clip_score"))
                    e.clip_score = j["clip_score"].get<double>();
                add_file(dir / j.at("file").get<std::string>(), std::move(e));
            }
        } else {
            std::vector<fs::path> files;
            for (const auto& f : fs::recursive_directory_iterator(dir)) {
                const auto ext = f.path().extension().string();
                if (f.is_regular_file() && (ext == ".letc" || ext == ".ply" || ext == ".obj"))
                    files.push_back(f.path());
            }
            std::sort(files.begin(), files.end());
            for (const auto& p : files) {
                DatasetEntry e;
                e.class_label = p.parent_path().filename().string();
                e.instance_id = p.stem().string();
                add_file(p, std::move(e));
            }
        }

        InstructionValidity validity;
        if (app.extra.contains("validity")) {
            validity = app.extra["validity"].get<InstructionValidity>();
        } else {
            std::set<std::string> classes;
            for (const auto& e : entries)
                classes.insert(e.class_label);
            for (const auto& y : texts)
                validity[y] = classes;
        }
        ClipFilter filter;
        if (app.extra.contains("clip_filter")) {
            const json& f = app.extra["clip_filter"];
            if (f.contains("threshold"))
                filter.threshold = f["threshold"].get<double>();
            filter.top_k = f.contains("top_k") && !f["top_k"].is_null()
                               ? std::optional<std::size_t>(f["top_k"].get<std::size_t>())
                               : std::nullopt;
        }
        return build_dataset(std::move(entries), std::move(validity), filter);
    }

    int cmd_train(const std::string& config, const std::string& data, const std::string& out,
                  const std::vector<std::string>& prompts_arg, const std::string& prompt_file,
                  const std::string& resume) {
        const AppConfig app = load_config_or_default(opt_path(config));
        TrainConfig cfg = app.extra.contains("train") ? app.extra["train"].get<TrainConfig>() : TrainConfig{};

        std::vector<std::string> texts = prompts_arg;
        if (!prompt_file.empty()) {
            std::ifstream in(prompt_file);
            if (!in)
                throw InputError("cannot read prompt file '" + prompt_file + "'");
            for (std::string line; std::getline(in, line);)
                if (!line.empty())
                    texts.push_back(line);
        }
        if (texts.empty())
            for (const auto& y : instruction_catalog(app))
                texts.push_back(y.text);
        if (texts.empty())
            throw ConfigError("no instructions: pass --prompt, --prompt-file or list them in the config");
        cfg.prompt_mode = texts.size() == 1 ? PromptMode::Single : PromptMode::Multi;

        std::vector<EditInstruction> instructions;
        for (const auto& t : texts)
            instructions.push_back(find_instruction(app, t));

        const auto codec = codec_from(app);
        const Priors priors = make_priors(app);
        const TrainingDataset dataset = load_data_dir(data, app, texts);

        const json editor_spec = section(app, "editor");
        EditorParams params;
        if (!resume.empty()) {
            params = load_editor(resume);
        } else {
            InitOptions opt;
            opt.tau = editor_spec.value("tau", kDefaultEditorTau);
            opt.schedule = app.schedule;
            opt.random_init = editor_spec.value("random_init", false);
            opt.seed = cfg.seed;
            params = init_from_pretrained(base_denoiser(editor_spec, codec->latent_shape()), codec->latent_shape(),
                                          texts, opt);
        }
        Editor editor(std::move(params));

        fs::create_directories(out);
        std::ofstream metrics_file(fs::path(out) / "metrics.jsonl");
        MetricsSink metrics(&metrics_file);
        TrainHooks hooks;
        hooks.metrics = &metrics;
        hooks.checkpoint_dir = out;
        const TrainResult r = train(cfg, dataset, editor, *codec, priors.set(), instructions, hooks);
        std::cout << "trained " << r.steps << " steps over " << r.epochs << " epochs; "
                  << r.checkpoints.size() << " checkpoint(s) in " << out << "\n";
        return 0;
    }

    int cmd_optimize(const std::string& config, const std::string& latent, const std::string& prompt, int steps,
                     const std::string& out) {
        const AppConfig app = load_config_or_default(opt_path(config));
        const TrainConfig cfg = app.extra.contains("train") ? app.extra["train"].get<TrainConfig>() : TrainConfig{};
        const auto codec = codec_from(app);
        const Priors priors = make_priors(app);
        const Latent r = load_latent(latent);
        const Latent result = test_time_optimize(r, find_instruction(app, prompt), *codec, priors.set(), steps, cfg);
        save_latent(out, result);
        std::cout << "wrote " << out << "\n";
        return 0;
    }

    int cmd_evaluate(const std::string& config, const std::string& ckpt, const std::string& eval_set,
                     const std::string& out) {
        const AppConfig app = load_config_or_default(opt_path(config));
        const auto codec = codec_from(app);
        const Editor editor(load_editor(ckpt));
        const json emb = section(app, "embedder");
        if (emb.value("adapter", "toy") != "toy")
            throw ConfigError("unknown embedder adapter '" + emb.value("adapter", "") + "'");
        ToyEmbedder embedder(emb.value("grid", std::size_t{4}));
        const json words = emb.value("color_words", json::object());
        for (const auto& [word, v] : words.items()) {
            const auto c = v.get<std::vector<double>>();
            if (c.size() != 3)
                throw ConfigError("colour word '" + word + "' needs three entries");
            embedder.set_color_word(word, c[0], c[1], c[2]);
        }
        const ToyBackbone backbone(section(app, "backbone").value("grid", std::size_t{8}));
        EvalConfig ecfg = app.extra.contains("eval") ? app.extra["eval"].get<EvalConfig>() : EvalConfig{};
        const EvalReport report = evaluate(editor, load_eval_set(eval_set), *codec, embedder, backbone, ecfg);
        write_report(out, report);
        std::cout << report.to_csv();
        return 0;
    }

    HttpService* g_service = nullptr;

    int cmd_serve(const std::string& config, const std::string& ckpt, const std::string& codec_arg,
                  const std::string& host, int port, const std::string& data_dir) {
        const AppConfig app = load_config_or_default(opt_path(config));
        const auto codec = codec_from_arg(codec_arg, app);
        const Editor editor(load_editor(ckpt));
        ServiceConfig scfg = app.extra.contains("service") ? app.extra["service"].get<ServiceConfig>() : ServiceConfig{};
        if (!data_dir.empty())
            scfg.data_dir = data_dir;
        if (scfg.data_dir.empty())
            scfg.data_dir = "sessions";
        TextToLatent sampler;
        if (const auto* toy = dynamic_cast<const ToyCodec*>(codec.get())) {
            sampler = [toy](const std::string& prompt) {
                std::seed_seq seq(prompt.begin(), prompt.end());
                Rng rng(seq);
                return toy->random_latent(rng);
            };
        }
        SessionManager sessions(editor, *codec, scfg, sampler);
        HttpService service(sessions);
        const int bound = service.bind(host, port);
        std::cout << "listening on " << host << ":" << bound << "\n" << std::flush;
        g_service = &service;
        std::signal(SIGINT, [](int) {
            if (g_service)
                g_service->stop();
        });
        std::signal(SIGTERM, [](int) {
            if (g_service)
                g_service->stop();
        });
        service.listen_after_bind();
        g_service = nullptr;
        return 0;
    }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Instruction-driven editing of 3D latents"};
    app.require_subcommand(1);
    std::string config;
    app.add_option("--config", config, "JSON config file (overridden by $LATENTEDIT_CONFIG)");

    auto* train_cmd = app.add_subcommand("train", "Train a feed-forward latent editor");
    std::string data, out, prompt_file, resume;
    std::vector<std::string> prompts;
    train_cmd->add_option("--data", data, "Training data directory")->required();
    train_cmd->add_option("--out", out, "Output directory")->required();
    train_cmd->add_option("--prompt", prompts, "Instruction (repeatable)");
    train_cmd->add_option("--prompt-file", prompt_file, "File with one instruction per line");
    train_cmd->add_option("--resume", resume, "Checkpoint directory to resume from");

    auto* opt_cmd = app.add_subcommand("optimize-latent", "Optimize one latent directly under the editing loss");
    std::string latent, prompt;
    int steps = 200;
    opt_cmd->add_option("--latent", latent)->required();
    opt_cmd->add_option("--prompt", prompt)->required();
    opt_cmd->add_option("--steps", steps);
    opt_cmd->add_option("--out", out)->required();

    auto* op_cmd = app.add_subcommand("latent-op", "Latent arithmetic");
    op_cmd->require_subcommand(1);
    std::string src, edit, vector_path, ckpt, instruction;
    std::vector<std::string> srcs, edits, chain_prompts;
    double eta = 1.0;
    std::uint64_t seed = 0;
    auto* scale_cmd = op_cmd->add_subcommand("scale", "r_src + eta (r_edit - r_src)");
    scale_cmd->add_option("--src", src)->required();
    scale_cmd->add_option("--edit", edit)->required();
    scale_cmd->add_option("--eta", eta)->required();
    scale_cmd->add_option("--out", out)->required();
    auto* chain_cmd = op_cmd->add_subcommand("chain", "Apply instructions one after another");
    chain_cmd->add_option("--ckpt", ckpt)->required();
    chain_cmd->add_option("--latent", latent)->required();
    chain_cmd->add_option("--prompt", chain_prompts, "Instruction (repeatable, applied in order)")->required();
    chain_cmd->add_option("--seed", seed);
    chain_cmd->add_option("--out-dir", out)->required();
    auto* extract_cmd = op_cmd->add_subcommand("extract-vector", "Mean residual over (src, edit) pairs");
    extract_cmd->add_option("--src", srcs, "Source latent (repeatable)")->required();
    extract_cmd->add_option("--edit", edits, "Edited latent (repeatable, same order)")->required();
    extract_cmd->add_option("--instruction", instruction)->required();
    extract_cmd->add_option("--out", out)->required();
    auto* apply_cmd = op_cmd->add_subcommand("apply-vector", "r + eta v");
    apply_cmd->add_option("--latent", latent)->required();
    apply_cmd->add_option("--vector", vector_path)->required();
    apply_cmd->add_option("--eta", eta);
    apply_cmd->add_option("--out", out)->required();

    auto* eval_cmd = app.add_subcommand("evaluate", "Score an editor on an evaluation set");
    std::string eval_set;
    eval_cmd->add_option("--ckpt", ckpt)->required();
    eval_cmd->add_option("--eval-set", eval_set)->required();
    eval_cmd->add_option("--out", out)->required();

    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP editing service");
    std::string codec_arg, host = "127.0.0.1", data_dir;
    int port = 8080;
    serve_cmd->add_option("--ckpt", ckpt)->required();
    serve_cmd->add_option("--codec", codec_arg, "\"toy\" or a codec spec JSON file");
    serve_cmd->add_option("--host", host);
    serve_cmd->add_option("--port", port);
    serve_cmd->add_option("--data-dir", data_dir, "Session storage directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train_cmd)
            return cmd_train(config, data, out, prompts, prompt_file, resume);
        if (*opt_cmd)
            return cmd_optimize(config, latent, prompt, steps, out);
        if (*scale_cmd) {
            save_latent(out, scale_edit(load_latent(src), load_latent(edit), eta));
            return 0;
        }
        if (*chain_cmd) {
            const Editor editor(load_editor(ckpt));
            const EditChain chain = sequential_edit(editor, load_latent(latent), chain_prompts, seed);
            fs::create_directories(out);
            for (std::size_t i = 0; i < chain.chain.size(); ++i)
                save_latent(fs::path(out) / ("step_" + std::to_string(i) + ".letc"), chain.chain[i]);
            return 0;
        }
        if (*extract_cmd) {
            if (srcs.size() != edits.size())
                throw InputError("--src and --edit must be given the same number of times");
            std::vector<std::pair<Latent, Latent>> pairs;
            for (std::size_t i = 0; i < srcs.size(); ++i)
                pairs.emplace_back(load_latent(srcs[i]), load_latent(edits[i]));
            save_edit_vector(out, extract_edit_vector(pairs, instruction));
            return 0;
        }
        if (*apply_cmd) {
            save_latent(out, apply_edit_vector(load_latent(latent), load_edit_vector(vector_path), eta));
            return 0;
        }
        if (*eval_cmd)
            return cmd_evaluate(config, ckpt, eval_set, out);
        if (*serve_cmd)
            return cmd_serve(config, ckpt, codec_arg, host, port, data_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
