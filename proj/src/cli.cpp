#include "accdiff/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>

#include <json.hpp>

#include "accdiff/bridge.hpp"
#include "accdiff/config.hpp"
#include "accdiff/tensor_file.hpp"

namespace accdiff::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string sanitize(const std::string& token) {
    std::string out;
    for (char ch : token) {
        const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') ||
                        ch == '-' || ch == '_';
        out += ok ? ch : '_';
    }
    return out.empty() ? "_" : out;
}

std::string pad2(std::size_t i) { return (i < 10 ? "0" : "") + std::to_string(i); }

PipelineConfig resolved_config(const RunOptions& o) {
    PipelineConfig config = load_config(o.config_path);
    if (o.seed) config.seed = *o.seed;
    if (o.scale) {
        config.target_h = config.latent_h * *o.scale;
        config.target_w = config.latent_w * *o.scale;
    }
    if (o.c) config.c = *o.c;
    if (o.se_radius) config.se_radius = *o.se_radius;
    if (o.workers) config.workers = *o.workers;
    if (o.output_dir) config.output_dir = o.output_dir->string();
    if (o.ablation == Ablation::NoPatchPrompts || o.ablation == Ablation::Both) config.patch_prompts = false;
    if (o.ablation == Ablation::NoWindowInteraction || o.ablation == Ablation::Both) {
        config.window_interaction = false;
    }
    config.validate();
    return config;
}

struct Sources {
    std::unique_ptr<AttentionSource> attention;
    std::optional<CaptureManifest> manifest;
};

Sources make_sources(const PipelineConfig& config, const fs::path& config_dir) {
    Sources s;
    if (config.attention_source == "recorded") {
        fs::path manifest = config.manifest_path;
        if (manifest.is_relative()) manifest = config_dir / manifest;
        s.manifest = load_manifest(manifest);
        s.attention = std::make_unique<RecordedAttention>(*s.manifest);
        if (s.manifest->tokens.size() != config.scene.blobs.size()) {
            throw Error(ErrorCode::Config, "scene must define one blob per recorded token");
        }
    } else {
        if (config.scene.blobs.empty()) throw Error(ErrorCode::Config, "synthetic attention needs scene blobs");
        const BaseGeometry g = base_geometry(config);
        if (g.height % config.attention_downsample != 0 || g.width % config.attention_downsample != 0) {
            throw Error(ErrorCode::Config, "attention_downsample must divide the base latent size");
        }
        s.attention = std::make_unique<SyntheticAttention>(config.scene, g.height / config.attention_downsample,
                                                           g.width / config.attention_downsample);
    }
    return s;
}

json prompts_json(const std::vector<PatchPrompt>& prompts, const PatchLayout& layout) {
    json arr = json::array();
    for (const PatchPrompt& p : prompts) {
        const Origin& o = layout.origins.at(p.patch_index);
        arr.push_back({{"patch", p.patch_index},
                       {"origin", {o.row, o.col}},
                       {"tokens", p.token_indices},
                       {"text", p.text},
                       {"fallback", p.fallback_used}});
    }
    return arr;
}

}  // namespace

Ablation parse_ablation(const std::string& name) {
    if (name == "none") return Ablation::None;
    if (name == "no-patch-prompts") return Ablation::NoPatchPrompts;
    if (name == "no-window-interaction") return Ablation::NoWindowInteraction;
    if (name == "both") return Ablation::Both;
    throw Error(ErrorCode::Config, "unknown ablation '" + name + "'");
}

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err) {
    PipelineConfig config;
    Sources sources;
    try {
        config = resolved_config(options);
        sources = make_sources(config, options.config_path.parent_path());
    } catch (const Error& e) {
        err << "config error: " << e.what() << '\n';
        return e.code() == ErrorCode::Config ? kConfigError : kRuntimeError;
    }

    try {
        const NoiseSchedule sched = make_schedule(config);
        const TokenFieldPredictor predictor(config.scene, sched);
        ProgressCallback progress;
        if (!options.quiet) {
            progress = [&err](const ProgressEvent& e) {
                if (e.step == e.total_steps) {
                    err << "stage " << e.stage << ": " << e.total_steps << " steps done\n";
                }
            };
        }
        const RunResult result = run(config, sched, predictor, *sources.attention, progress);

        // Everything is computed before the first write.
        const fs::path dir = config.output_dir;
        fs::create_directories(dir);
        write_tensor(dir / "phase1_z0.acct", to_tensor(result.phase1_z0));
        TensorFile attention;
        attention.dims = {result.attention.pixels(), result.attention.token_count()};
        attention.f32 = result.attention.values;
        write_tensor(dir / "attention.acct", attention);

        json stages = json::array();
        for (const StageArtifacts& s : result.stages) {
            const std::string prefix = "stage" + std::to_string(s.scale) + "_";
            write_tensor(dir / (prefix + "z0_upsampled.acct"), to_tensor(s.z0_upsampled));
            write_tensor(dir / (prefix + "inverted.acct"), stack_latents(s.inverted));
            write_tensor(dir / (prefix + "z0.acct"), to_tensor(s.z0));
            stages.push_back({{"scale", s.scale},
                              {"shape", {s.z0.height(), s.z0.width(), s.z0.channels()}},
                              {"eta1", s.eta1},
                              {"eta2", s.eta2},
                              {"prompts", prompts_json(s.prompts, s.layout)}});
        }
        write_tensor(dir / "final.acct", to_tensor(result.final_latent));
        const json artifacts = {{"config", config_to_json(config)},
                                {"tokens", result.attention.tokens},
                                {"stages", stages}};
        write_file_atomic(dir / "artifacts.json", artifacts.dump(2));
        out << "final " << to_string(result.final_latent.shape()) << " -> " << (dir / "final.acct").string()
            << '\n';
        return kOk;
    } catch (const Error& e) {
        err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
        return e.code() == ErrorCode::Config ? kConfigError : kRuntimeError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
}

int cmd_dump_masks(const fs::path& config_path, const fs::path& out_dir, std::ostream& out, std::ostream& err) {
    PipelineConfig config;
    Sources sources;
    try {
        config = load_config(config_path);
        sources = make_sources(config, config_path.parent_path());
    } catch (const Error& e) {
        err << "config error: " << e.what() << '\n';
        return e.code() == ErrorCode::Config ? kConfigError : kRuntimeError;
    }
    try {
        AttentionMaps maps;
        if (sources.manifest) {
            std::vector<AttentionMaps> records;
            for (const AttentionRecord& r : sources.manifest->attention) {
                records.push_back(load_attention_record(r, sources.manifest->tokens));
            }
            maps = aggregate_attention(records);
        } else {
            const Latent3 unused;
            maps = sources.attention->capture(config.steps, unused).front();
        }
        const BaseGeometry g = base_geometry(config);
        const std::size_t ds = g.height / maps.map_h;
        const std::size_t up_h = config.target_h / ds, up_w = config.target_w / ds;

        fs::create_directories(out_dir);
        const auto raw = binarize(maps);
        std::size_t written = 0;
        for (std::size_t j = 0; j < raw.size(); ++j) {
            const std::string stem = pad2(j) + "_" + sanitize(maps.tokens[j]) + "_";
            const BinaryMask2D opened = open_mask(raw[j], config.se_radius);
            write_pgm(out_dir / (stem + "binarized.pgm"), raw[j]);
            write_pgm(out_dir / (stem + "opened.pgm"), opened);
            write_pgm(out_dir / (stem + "upscaled.pgm"), upscale_mask(opened, up_h, up_w));
            written += 3;
        }
        out << "wrote " << written << " masks to " << out_dir.string() << '\n';
        return kOk;
    } catch (const Error& e) {
        err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
        return e.code() == ErrorCode::Config ? kConfigError : kRuntimeError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
}

int cmd_inspect(const fs::path& tensor_path, std::ostream& out, std::ostream& err) {
    TensorFile t;
    try {
        t = read_tensor(tensor_path);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    }
    std::string dims;
    for (std::size_t i = 0; i < t.dims.size(); ++i) dims += (i ? "x" : "") + std::to_string(t.dims[i]);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
    std::uint64_t nan = 0, finite_count = 0;
    const auto visit = [&](double v) {
        if (std::isnan(v)) {
            ++nan;
            return;
        }
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
        ++finite_count;
    };
    if (t.dtype == DType::Float32) {
        for (float v : t.f32) visit(v);
    } else {
        for (std::uint8_t v : t.u8) visit(v);
    }
    const double mean = finite_count ? sum / static_cast<double>(finite_count) : 0.0;
    if (!finite_count) lo = hi = 0.0;
    out << "dims=" << dims << " dtype=" << to_string(t.dtype) << " count=" << t.element_count() << '\n';
    out << "min=" << fmt_number(lo) << " max=" << fmt_number(hi) << " mean=" << fmt_number(mean)
        << " nan=" << nan << '\n';
    return kOk;
}

int cmd_replay(const fs::path& manifest_path, double tolerance, const std::optional<fs::path>& out_dir,
               std::ostream& out, std::ostream& err) {
    try {
        const CaptureManifest manifest = load_manifest(manifest_path);
        if (manifest.eps.empty()) {
            out << "nothing to replay\n";
            return kOk;
        }
        const ReplayReport report = replay_phase1(manifest, tolerance);
        if (out_dir) {
            fs::create_directories(*out_dir);
            for (std::size_t t = 0; t < report.trajectory.size(); ++t) {
                write_tensor(*out_dir / ("z_" + std::to_string(t) + ".acct"), to_tensor(report.trajectory[t]));
            }
        }
        if (report.first_divergent_step) {
            out << "diverged at step " << *report.first_divergent_step << " max_error=" << fmt_number(report.max_error)
                << '\n';
            return kRuntimeError;
        }
        out << "replayed " << report.steps << " steps max_error=" << fmt_number(report.max_error) << '\n';
        return kOk;
    } catch (const Error& e) {
        err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
        return e.code() == ErrorCode::Format || e.code() == ErrorCode::Config ? kConfigError : kRuntimeError;
    }
}

}  // namespace accdiff::cli
