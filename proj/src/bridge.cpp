#include "accdiff/bridge.hpp"

#include <fstream>
#include <iterator>

#include <json.hpp>

#include "accdiff/tensor_file.hpp"

namespace accdiff {

using nlohmann::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& rel) {
    std::filesystem::path p(rel);
    if (p.is_relative()) p = base / p;
    if (!std::filesystem::exists(p)) throw Error(ErrorCode::Io, "manifest references missing file " + p.string());
    return p;
}

std::vector<StepRecord> step_records(const json& j, const char* key, const std::filesystem::path& base) {
    std::vector<StepRecord> out;
    if (!j.contains(key)) return out;
    for (const json& r : j.at(key)) {
        out.push_back({r.at("timestep").get<int>(), resolve(base, r.at("file").get<std::string>())});
    }
    return out;
}

}  // namespace

CaptureManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot read manifest " + path.string());
    const auto base = path.parent_path();
    CaptureManifest m;
    try {
        const json j = json::parse(in);
        m.model = j.value("model", "");
        m.tokens = j.value("tokens", std::vector<std::string>{});
        m.token_indices = j.value("token_indices", std::vector<int>{});
        if (!m.token_indices.empty() && m.token_indices.size() != m.tokens.size()) {
            throw Error(ErrorCode::Format, "token_indices length differs from tokens");
        }
        if (j.contains("latent")) {
            const json& l = j.at("latent");
            m.latent = {l.at("height").get<std::size_t>(), l.at("width").get<std::size_t>(),
                        l.at("channels").get<std::size_t>()};
        }
        m.alpha_bar = j.value("alpha_bar", std::vector<double>{});
        if (j.contains("initial_latent")) m.initial_latent = resolve(base, j.at("initial_latent").get<std::string>());
        if (j.contains("attention")) {
            for (const json& r : j.at("attention")) {
                m.attention.push_back({r.at("timestep").get<int>(), r.value("layer", ""),
                                       r.value("heads", std::size_t{1}), r.at("map_h").get<std::size_t>(),
                                       r.at("map_w").get<std::size_t>(),
                                       resolve(base, r.at("file").get<std::string>())});
            }
        }
        m.eps = step_records(j, "eps", base);
        m.trajectory = step_records(j, "trajectory", base);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Format, std::string("malformed manifest: ") + e.what());
    }
    return m;
}

AttentionMaps load_attention_record(const AttentionRecord& record, const std::vector<std::string>& tokens) {
    const TensorFile t = read_tensor(record.file);
    if (t.dtype != DType::Float32 || t.dims.size() != 2 || t.dims[0] != record.map_h * record.map_w ||
        t.dims[1] != tokens.size()) {
        throw Error(ErrorCode::ShapeMismatch, "attention record " + record.file.string() +
                                                  " does not match manifest metadata");
    }
    AttentionMaps maps{record.map_h, record.map_w, tokens, t.f32};
    maps.validate();
    return maps;
}

RecordedAttention::RecordedAttention(const CaptureManifest& manifest) : tokens_(manifest.tokens) {
    for (const AttentionRecord& r : manifest.attention) {
        by_step_[r.timestep].push_back(load_attention_record(r, tokens_));
    }
}

std::vector<AttentionMaps> RecordedAttention::capture(int t, const Latent3&) const {
    const auto it = by_step_.find(t);
    return it == by_step_.end() ? std::vector<AttentionMaps>{} : it->second;
}

RecordedPredictor::RecordedPredictor(const CaptureManifest& manifest) {
    for (const StepRecord& r : manifest.eps) eps_[r.timestep] = to_latent(read_tensor(r.file));
}

Latent3 RecordedPredictor::predict(const Latent3& z_t, int t, TokenSpan) const {
    const auto it = eps_.find(t);
    if (it == eps_.end()) throw Error(ErrorCode::Contract, "no recorded noise for step " + std::to_string(t));
    require_same_shape(z_t, it->second, "recorded predictor");
    return it->second;
}

ReplayReport replay_phase1(const CaptureManifest& manifest, double tolerance) {
    ReplayReport report;
    report.steps = static_cast<int>(manifest.eps.size());
    if (manifest.eps.empty()) return report;

    std::vector<double> alpha_bar = manifest.alpha_bar;
    if (alpha_bar.empty()) {
        alpha_bar = make_schedule(report.steps, 1e-4, 2e-2).alpha_bars();
    }
    const NoiseSchedule sched(alpha_bar);
    if (sched.steps() != report.steps) {
        throw Error(ErrorCode::Format, "manifest has " + std::to_string(report.steps) + " noise records for a " +
                                           std::to_string(sched.steps()) + "-step schedule");
    }
    if (manifest.initial_latent.empty()) throw Error(ErrorCode::Format, "manifest lacks initial_latent");

    std::map<int, Latent3> expected;
    for (const StepRecord& r : manifest.trajectory) expected[r.timestep] = to_latent(read_tensor(r.file));

    PipelineConfig config;
    config.steps = report.steps;
    config.guidance_scale = 1.0;
    config.latent_h = config.target_h = manifest.latent.height;
    config.latent_w = config.target_w = manifest.latent.width;
    config.channels = manifest.latent.channels;

    LowResOptions options;
    options.initial = to_latent(read_tensor(manifest.initial_latent));
    report.trajectory.resize(static_cast<std::size_t>(report.steps));
    options.on_step = [&](int t, const Latent3& z_prev) {
        report.trajectory[static_cast<std::size_t>(t - 1)] = z_prev;
        const auto it = expected.find(t - 1);
        if (it == expected.end()) return;
        const double err = max_abs_diff(z_prev, it->second);
        report.max_error = std::max(report.max_error, err);
        if (err > tolerance && !report.first_divergent_step) report.first_divergent_step = t;
    };

    const RecordedPredictor predictor(manifest);
    // Attention is irrelevant to the trajectory; a single dummy token keeps
    // aggregation well-formed when the manifest carries no maps.
    const SyntheticAttention dummy(SynthScene{{Blob{"_", 0.5, 0.5, 0.1, 1.0}}}, 1, 1);
    if (manifest.attention.empty()) {
        generate_low_res(config, sched, predictor, dummy, options);
    } else {
        generate_low_res(config, sched, predictor, RecordedAttention(manifest), options);
    }
    return report;
}

}  // namespace accdiff
