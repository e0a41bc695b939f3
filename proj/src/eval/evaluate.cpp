// Copyright (c) 2026, The latentedit Authors
// SPDX-License-Identifier: Apache-2.0

#include "latentedit/eval/evaluate.hpp"
#include "latentedit/codec/image_io.hpp"
#include "latentedit/core/config.hpp"
#include "latentedit/core/error.hpp"
#include "latentedit/core/tensor_io.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace latentedit {

    using nlohmann::json;

    namespace {

        std::vector<Tensor> render_views(const Codec& codec, const Latent& latent, const std::vector<Viewpoint>& vps,
                                         const EvalConfig& cfg) {
            const FieldModel field = codec.decode(latent);
            std::vector<Tensor> out;
            out.reserve(vps.size());
            for (const auto& vp : vps) {
                const RenderedView view = codec.render(field, vp, cfg.render_resolution);
                const auto side = static_cast<std::size_t>(cfg.metric_resolution);
                out.push_back(resize_bilinear(view.rgb, side, side));
            }
            return out;
        }

        AssetOrigin parse_origin(const std::string& s) {
            if (s == "scanned")
                return AssetOrigin::Scanned;
            if (s == "generated")
                return AssetOrigin::Generated;
            throw FormatError("unknown asset origin '" + s + "'");
        }

        std::string hex(std::uint64_t v) {
            std::ostringstream os;
            os << std::hex << std::setw(16) << std::setfill('0') << v;
            return os.str();
        }

        std::string csv_field(const std::string& s) {
            if (s.find_first_of(",\"\n") == std::string::npos)
                return s;
            std::string out = "\"";
            for (char c : s) {
                if (c == '"')
                    out += '"';
                out += c;
            }
            return out + "\"";
        }

        std::string fmt(double v) {
            std::ostringstream os;
            os << std::setprecision(10) << v;
            return os.str();
        }

    } // namespace

    void EvalPair::validate() const {
        instruction.validate();
        if (source_text.empty() || target_text.empty())
            throw InputError("eval pair texts must be non-empty");
    }

    void to_json(json& j, const EvalConfig& c) {
        j = json{{"views", c.views},
                 {"metric_resolution", c.metric_resolution},
                 {"render_resolution", c.render_resolution},
                 {"camera", c.camera},
                 {"seed", c.seed}};
    }

    void from_json(const json& j, EvalConfig& c) {
        c.views = j.value("views", c.views);
        c.metric_resolution = j.value("metric_resolution", c.metric_resolution);
        c.render_resolution = j.value("render_resolution", c.render_resolution);
        if (j.contains("camera"))
            c.camera = j["camera"].get<CameraConfig>();
        c.seed = j.value("seed", c.seed);
    }

    EvalReport evaluate(const Editor& editor, const std::vector<EvalPair>& eval_set, const Codec& codec,
                        const ImageTextEmbedder& embedder, const StructureBackbone& backbone,
                        const EvalConfig& cfg) {
        if (eval_set.empty())
            throw InputError("evaluation set is empty");
        if (cfg.views < 1 || cfg.metric_resolution < 1 || cfg.render_resolution < 1)
            throw ConfigError("evaluation views and resolutions must be positive");
        cfg.camera.validate();
        for (const auto& p : eval_set) {
            p.validate();
            editor.params().instruction_index(p.instruction.text);
        }

        const auto vps = uniform_viewpoints(cfg.camera, cfg.views);
        EvalReport report;
        report.views = cfg.views;
        report.resolution = cfg.metric_resolution;
        report.editor_checksum = hex(editor.params().checksum());
        report.codec_id = codec.id();
        report.embedder_id = embedder.id();
        report.backbone_id = backbone.id();
        report.config_hash = config_hash(json(cfg));

        double sd_acc = 0.0;
        int sd_count = 0;
        for (const auto& p : eval_set) {
            const Latent edited = editor.edit(p.latent, p.instruction.text, cfg.seed);
            const auto src = render_views(codec, p.latent, vps, cfg);
            const auto dst = render_views(codec, edited, vps, cfg);

            PairMetrics m;
            m.class_label = p.class_label;
            m.instruction = p.instruction.text;
            m.kind = p.instruction.kind;
            m.clip_sim = clip_sim(dst, p.target_text, embedder);
            m.clip_dir = clip_dir(src, dst, p.source_text, p.target_text, embedder);
            if (p.instruction.kind == EditKind::Global) {
                double acc = 0.0;
                for (std::size_t v = 0; v < src.size(); ++v)
                    acc += structure_distance(src[v], dst[v], backbone);
                m.structure_distance = acc / static_cast<double>(src.size());
                sd_acc += *m.structure_distance;
                ++sd_count;
            }
            report.clip_sim += m.clip_sim;
            report.clip_dir += m.clip_dir;
            report.pairs.push_back(std::move(m));
        }
        const auto n = static_cast<double>(eval_set.size());
        report.clip_sim /= n;
        report.clip_dir /= n;
        if (sd_count > 0)
            report.structure_distance = sd_acc / sd_count;
        return report;
    }

    json EvalReport::to_json() const {
        json rows = json::array();
        for (const auto& p : pairs) {
            json r{{"class_label", p.class_label},
                   {"instruction", p.instruction},
                   {"kind", to_string(p.kind)},
                   {"clip_sim", p.clip_sim},
                   {"clip_dir", p.clip_dir}};
            r["structure_distance"] = p.structure_distance ? json(*p.structure_distance) : json(nullptr);
            rows.push_back(std::move(r));
        }
        json agg{{"clip_sim", clip_sim}, {"clip_dir", clip_dir}};
        agg["structure_distance"] = structure_distance ? json(*structure_distance) : json(nullptr);
        return json{{"pairs", rows},
                    {"aggregate", agg},
                    {"views", views},
                    {"resolution", resolution},
                    {"editor_checksum", editor_checksum},
                    {"codec_id", codec_id},
                    {"embedder_id", embedder_id},
                    {"backbone_id", backbone_id},
                    {"config_hash", config_hash}};
    }

    std::string EvalReport::to_csv() const {
        std::ostringstream os;
        os << "class_label,instruction,kind,clip_sim,clip_dir,structure_distance\n";
        for (const auto& p : pairs) {
            os << csv_field(p.class_label) << ',' << csv_field(p.instruction) << ',' << to_string(p.kind) << ','
               << fmt(p.clip_sim) << ',' << fmt(p.clip_dir) << ','
               << (p.structure_distance ? fmt(*p.structure_distance) : "") << '\n';
        }
        os << "mean,,," << fmt(clip_sim) << ',' << fmt(clip_dir) << ','
           << (structure_distance ? fmt(*structure_distance) : "") << '\n';
        return os.str();
    }

    Tensor bar_chart(const std::vector<double>& values, double lo, double hi, int height, int bar_width) {
        if (values.empty() || hi <= lo || height < 2 || bar_width < 2)
            throw InputError("bar_chart: need values, hi > lo and a positive size");
        const int gap = bar_width / 2;
        const int width = gap + static_cast<int>(values.size()) * (bar_width + gap);
        Tensor img({static_cast<std::size_t>(height), static_cast<std::size_t>(width), 3}, 1.0);
        auto row_of = [&](double v) {
            const double f = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
            return static_cast<int>(std::lround((1.0 - f) * (height - 1)));
        };
        const int zero_row = row_of(0.0);
        for (std::size_t k = 0; k < values.size(); ++k) {
            const int x0 = gap + static_cast<int>(k) * (bar_width + gap);
            const int top = std::min(row_of(values[k]), zero_row), bottom = std::max(row_of(values[k]), zero_row);
            for (int y = top; y <= bottom; ++y)
                for (int x = x0; x < x0 + bar_width; ++x) {
                    img.at(y, x, 0) = 0.2;
                    img.at(y, x, 1) = 0.4;
                    img.at(y, x, 2) = 0.8;
                }
        }
        for (int x = 0; x < width; ++x)
            for (std::size_t c = 0; c < 3; ++c)
                img.at(zero_row, x, c) = 0.0;
        return img;
    }

    void write_report(const std::filesystem::path& dir, const EvalReport& report) {
        std::filesystem::create_directories(dir);
        write_json(dir / "report.json", report.to_json());
        std::ofstream(dir / "report.csv") << report.to_csv();

        std::vector<double> sim, dir_sim, sd;
        for (const auto& p : report.pairs) {
            sim.push_back(p.clip_sim);
            dir_sim.push_back(p.clip_dir);
            if (p.structure_distance)
                sd.push_back(*p.structure_distance);
        }
        write_png_rgb(dir / "clip_sim.png", bar_chart(sim, -1.0, 1.0));
        write_png_rgb(dir / "clip_dir.png", bar_chart(dir_sim, -1.0, 1.0));
        if (!sd.empty()) {
            const double top = std::max(1e-3, *std::max_element(sd.begin(), sd.end()));
            write_png_rgb(dir / "structure_distance.png", bar_chart(sd, 0.0, top));
        }
    }

    std::vector<EvalPair> load_eval_set(const std::filesystem::path& path) {
        const json doc = read_json(path);
        if (!doc.is_array())
            throw FormatError("eval set '" + path.string() + "' must be a JSON array");
        std::vector<EvalPair> out;
        for (const auto& e : doc) {
            EvalPair p;
            std::filesystem::path lp = e.at("latent").get<std::string>();
            if (lp.is_relative())
                lp = path.parent_path() / lp;
            p.latent = load_latent(lp);
            p.class_label = e.value("class_label", "");
            p.origin = parse_origin(e.value("origin", "generated"));
            p.instruction = e.at("instruction").get<EditInstruction>();
            p.source_text = e.at("source_text").get<std::string>();
            p.target_text = e.at("target_text").get<std::string>();
            p.validate();
            out.push_back(std::move(p));
        }
        return out;
    }

} // namespace latentedit
