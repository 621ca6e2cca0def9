#include "accdiff/config.hpp"

#include <fstream>
#include <iterator>
#include <set>
#include <string>

namespace accdiff {

using nlohmann::json;

namespace {

template <typename T>
void read_field(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Config, std::string("field '") + key + "': " + e.what());
    }
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) throw Error(ErrorCode::Config, "unknown field '" + key + "' in " + where);
    }
}

Blob blob_from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::Config, "scene blob must be an object");
    reject_unknown(j, {"token", "center", "radius", "amplitude"}, "scene blob");
    Blob b;
    read_field(j, "token", b.token);
    if (j.contains("center")) {
        const auto center = j.at("center");
        if (!center.is_array() || center.size() != 2) {
            throw Error(ErrorCode::Config, "blob center must be [row, col]");
        }
        b.center_row = center[0].get<double>();
        b.center_col = center[1].get<double>();
    }
    read_field(j, "radius", b.radius);
    read_field(j, "amplitude", b.amplitude);
    if (b.token.empty()) throw Error(ErrorCode::Config, "blob token must be non-empty");
    return b;
}

}  // namespace

PipelineConfig config_from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::Config, "config must be a JSON object");
    reject_unknown(j,
                   {"steps", "beta_start", "beta_end", "guidance_scale", "latent_h", "latent_w", "channels",
                    "target_h", "target_w", "window_h", "window_w", "stride_h", "stride_w", "alpha1", "alpha2",
                    "alpha3", "c", "se_radius", "attention_downsample", "fallback", "seed", "shuffle_family",
                    "upsample", "workers", "patch_prompts", "window_interaction", "dilated_branch", "scene",
                    "attention", "output_dir"},
                   "config");
    PipelineConfig c;
    try {
        read_field(j, "steps", c.steps);
        read_field(j, "beta_start", c.beta_start);
        read_field(j, "beta_end", c.beta_end);
        read_field(j, "guidance_scale", c.guidance_scale);
        read_field(j, "latent_h", c.latent_h);
        read_field(j, "latent_w", c.latent_w);
        read_field(j, "channels", c.channels);
        read_field(j, "target_h", c.target_h);
        read_field(j, "target_w", c.target_w);
        read_field(j, "window_h", c.window_h);
        read_field(j, "window_w", c.window_w);
        read_field(j, "stride_h", c.stride_h);
        read_field(j, "stride_w", c.stride_w);
        read_field(j, "alpha1", c.alpha1);
        read_field(j, "alpha2", c.alpha2);
        read_field(j, "alpha3", c.alpha3);
        read_field(j, "c", c.c);
        read_field(j, "se_radius", c.se_radius);
        read_field(j, "attention_downsample", c.attention_downsample);
        read_field(j, "seed", c.seed);
        read_field(j, "workers", c.workers);
        read_field(j, "patch_prompts", c.patch_prompts);
        read_field(j, "window_interaction", c.window_interaction);
        read_field(j, "dilated_branch", c.dilated_branch);
        read_field(j, "output_dir", c.output_dir);
        std::string name;
        if (j.contains("fallback")) {
            read_field(j, "fallback", name);
            c.fallback = parse_fallback_policy(name);
        }
        if (j.contains("shuffle_family")) {
            read_field(j, "shuffle_family", name);
            c.shuffle_family = parse_permutation_family(name);
        }
        if (j.contains("upsample")) {
            read_field(j, "upsample", name);
            c.upsample = parse_upsample_kernel(name);
        }
        if (j.contains("scene")) {
            const json& scene = j.at("scene");
            if (!scene.is_object()) throw Error(ErrorCode::Config, "scene must be an object");
            reject_unknown(scene, {"blobs"}, "scene");
            if (scene.contains("blobs")) {
                if (!scene.at("blobs").is_array()) throw Error(ErrorCode::Config, "scene.blobs must be an array");
                for (const json& b : scene.at("blobs")) c.scene.blobs.push_back(blob_from_json(b));
            }
        }
        if (j.contains("attention")) {
            const json& att = j.at("attention");
            if (!att.is_object()) throw Error(ErrorCode::Config, "attention must be an object");
            reject_unknown(att, {"source", "manifest"}, "attention");
            read_field(att, "source", c.attention_source);
            read_field(att, "manifest", c.manifest_path);
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Config) throw;
        throw Error(ErrorCode::Config, e.what());
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Config, e.what());
    }
    c.validate();
    return c;
}

json config_to_json(const PipelineConfig& c) {
    json blobs = json::array();
    for (const Blob& b : c.scene.blobs) {
        blobs.push_back({{"token", b.token},
                         {"center", {b.center_row, b.center_col}},
                         {"radius", b.radius},
                         {"amplitude", b.amplitude}});
    }
    json attention = {{"source", c.attention_source}};
    if (!c.manifest_path.empty()) attention["manifest"] = c.manifest_path;
    return {
        {"steps", c.steps},
        {"beta_start", c.beta_start},
        {"beta_end", c.beta_end},
        {"guidance_scale", c.guidance_scale},
        {"latent_h", c.latent_h},
        {"latent_w", c.latent_w},
        {"channels", c.channels},
        {"target_h", c.target_h},
        {"target_w", c.target_w},
        {"window_h", c.window_h},
        {"window_w", c.window_w},
        {"stride_h", c.stride_h},
        {"stride_w", c.stride_w},
        {"alpha1", c.alpha1},
        {"alpha2", c.alpha2},
        {"alpha3", c.alpha3},
        {"c", c.c},
        {"se_radius", c.se_radius},
        {"attention_downsample", c.attention_downsample},
        {"fallback", std::string(to_string(c.fallback))},
        {"seed", c.seed},
        {"shuffle_family", std::string(to_string(c.shuffle_family))},
        {"upsample", std::string(to_string(c.upsample))},
        {"workers", c.workers},
        {"patch_prompts", c.patch_prompts},
        {"window_interaction", c.window_interaction},
        {"dilated_branch", c.dilated_branch},
        {"scene", {{"blobs", blobs}}},
        {"attention", attention},
        {"output_dir", c.output_dir},
    };
}

PipelineConfig parse_config(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Config, std::string("malformed JSON: ") + e.what());
    }
    return config_from_json(j);
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Config, "cannot read config " + path.string());
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text);
}

}  // namespace accdiff
