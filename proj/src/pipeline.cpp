#include "accdiff/pipeline.hpp"

#include <numeric>
#include <string>

#include "accdiff/parallel.hpp"
#include "accdiff/rng.hpp"

namespace accdiff {

namespace {

void config_error(const std::string& message) { throw Error(ErrorCode::Config, message); }

std::uint64_t stage_seed(std::uint64_t seed, std::uint32_t stage, Branch branch) {
    const auto block = philox4x32({stage, static_cast<std::uint32_t>(branch), 0x5eed5eedu, 0u},
                                  {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
    return (static_cast<std::uint64_t>(block[1]) << 32) | block[0];
}

std::vector<std::size_t> all_tokens(std::size_t count) {
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
}

}  // namespace

void PipelineConfig::validate() const {
    if (steps < 1) config_error("steps must be >= 1");
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
        config_error("betas must satisfy 0 < beta_start <= beta_end < 1");
    }
    if (latent_h == 0 || latent_w == 0 || channels == 0) config_error("latent dimensions must be positive");
    if (target_h == 0 || target_w == 0) config_error("target dimensions must be positive");
    if (!(c > 0.0 && c < 1.0)) config_error("c must lie in (0, 1)");
    if (alpha1 < 0.0 || alpha2 < 0.0 || alpha3 < 0.0) config_error("decay exponents must be >= 0");
    if (attention_downsample == 0) config_error("attention_downsample must be >= 1");
    if (workers == 0) config_error("workers must be >= 1");
    if (effective_stride_h() == 0 || effective_stride_w() == 0) config_error("strides must be positive");
    if (attention_source != "synthetic" && attention_source != "recorded") {
        config_error("attention source must be 'synthetic' or 'recorded'");
    }
    if (attention_source == "recorded" && manifest_path.empty()) {
        config_error("recorded attention needs a manifest path");
    }
    try {
        scene.validate();
    } catch (const Error& e) {
        config_error(e.what());
    }
    base_geometry(*this);
}

BaseGeometry base_geometry(const PipelineConfig& config) {
    const std::size_t th = config.target_h, tw = config.target_w;
    BaseGeometry g{config.latent_h, config.latent_w, 1};
    if (th * config.latent_w != tw * config.latent_h) {
        // Longer target side takes the longer pretrained side.
        const std::size_t longest = std::max(config.latent_h, config.latent_w);
        if (th >= tw) {
            g.height = longest;
            if ((longest * tw) % th != 0) config_error("target aspect ratio gives a fractional base width");
            g.width = longest * tw / th;
        } else {
            g.width = longest;
            if ((longest * th) % tw != 0) config_error("target aspect ratio gives a fractional base height");
            g.height = longest * th / tw;
        }
    }
    if (th < g.height || tw < g.width) config_error("target must not be smaller than the base latent");
    if (th % g.height != 0 || tw % g.width != 0 || th / g.height != tw / g.width) {
        config_error("target " + std::to_string(th) + "x" + std::to_string(tw) +
                     " is not an integer multiple of base " + std::to_string(g.height) + "x" +
                     std::to_string(g.width));
    }
    g.scale = th / g.height;
    return g;
}

NoiseSchedule make_schedule(const PipelineConfig& config) {
    return make_schedule(config.steps, config.beta_start, config.beta_end);
}

SyntheticAttention::SyntheticAttention(SynthScene scene, std::size_t map_h, std::size_t map_w)
    : maps_(synth_attention(scene, map_h, map_w)) {}

Latent3 guided_ddim(const NoisePredictor& predictor, const Latent3& z_t, int t, TokenSpan tokens,
                    double guidance_scale, const NoiseSchedule& sched) {
    const Latent3 eps_uncond = predictor.predict(z_t, t, {});
    const Latent3 eps_cond = predictor.predict(z_t, t, tokens);
    if (eps_uncond.shape() != z_t.shape() || eps_cond.shape() != z_t.shape()) {
        throw Error(ErrorCode::Contract, "predictor returned shape " + to_string(eps_cond.shape()) + " for input " +
                                             to_string(z_t.shape()));
    }
    if (!eps_uncond.all_finite() || !eps_cond.all_finite()) {
        throw Error(ErrorCode::Contract, "predictor returned non-finite values at step " + std::to_string(t));
    }
    return ddim_step(z_t, cfg_combine(eps_uncond, eps_cond, guidance_scale), t, sched);
}

LowResResult generate_low_res(const PipelineConfig& config, const NoiseSchedule& sched,
                              const NoisePredictor& predictor, const AttentionSource& attention,
                              const LowResOptions& options) {
    const BaseGeometry g = base_geometry(config);
    const Shape3 shape{g.height, g.width, config.channels};
    Latent3 z;
    if (options.initial) {
        if (options.initial->shape() != shape) {
            throw Error(ErrorCode::ShapeMismatch, "initial latent " + to_string(options.initial->shape()) +
                                                      " does not match base " + to_string(shape));
        }
        z = *options.initial;
    } else {
        z = Latent3(shape);
        fill_normal({config.seed, 1, static_cast<std::uint32_t>(sched.steps()), Branch::Init, 0}, z.data());
    }
    const std::vector<std::size_t> prompt = all_tokens(attention.tokens().size());
    std::vector<AttentionMaps> records;
    for (int t = sched.steps(); t >= 1; --t) {
        for (AttentionMaps& rec : attention.capture(t, z)) records.push_back(std::move(rec));
        z = guided_ddim(predictor, z, t, prompt, config.guidance_scale, sched);
        if (options.on_step) options.on_step(t, z);
        if (options.progress) options.progress({1, sched.steps() - t + 1, sched.steps()});
    }
    if (records.empty()) throw Error(ErrorCode::Contract, "attention source produced no records");
    return {std::move(z), aggregate_attention(records)};
}

std::vector<Latent3> noise_invert(const Latent3& z0, const NoiseSchedule& sched, std::uint64_t seed,
                                  std::uint32_t stage) {
    std::vector<Latent3> series;
    series.reserve(static_cast<std::size_t>(sched.steps()));
    Latent3 eps(z0.shape());
    for (int t = 1; t <= sched.steps(); ++t) {
        fill_normal({seed, stage, static_cast<std::uint32_t>(t), Branch::Inversion, 0}, eps.data());
        series.push_back(forward_diffuse(z0, t, eps, sched));
    }
    return series;
}

Latent3 skip_residual(const Latent3& current, const Latent3& inverted, double eta1) {
    require_same_shape(current, inverted, "skip_residual");
    if (!(eta1 >= 0.0 && eta1 <= 1.0)) {
        throw Error(ErrorCode::OutOfRange, "skip residual weight " + std::to_string(eta1) + " outside [0, 1]");
    }
    if (eta1 == 1.0) return inverted;
    if (eta1 == 0.0) return current;
    Latent3 out(current.shape());
    auto dst = out.data();
    auto z = current.data();
    auto zp = inverted.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] = static_cast<float>(eta1 * zp[i] + (1.0 - eta1) * z[i]);
    }
    return out;
}

std::vector<Latent3> denoise_patch_branch(const Latent3& z_hat, int t, const NoiseSchedule& sched,
                                          const NoisePredictor& predictor, const HighResStepPlan& plan) {
    if (plan.patch_tokens.size() != plan.layout.count()) {
        throw Error(ErrorCode::ShapeMismatch, "need one prompt per window (" + std::to_string(plan.layout.count()) +
                                                  "), got " + std::to_string(plan.patch_tokens.size()));
    }
    std::vector<Latent3> patches = extract_patches(z_hat, plan.layout);
    parallel_for(patches.size(), plan.workers, [&](std::size_t i) {
        patches[i] = guided_ddim(predictor, patches[i], t, plan.patch_tokens[i], plan.guidance_scale, sched);
    });
    return patches;
}

Latent3 denoise_dilated_branch(const Latent3& z_hat, int t, const NoiseSchedule& sched,
                               const NoisePredictor& predictor, const HighResStepPlan& plan) {
    const DilatedSet split = dilated_split(z_hat, plan.dilation_h, plan.dilation_w);
    auto [shuffled, map] = window_shuffle(split, t, plan.shuffle_seed, plan.family);
    parallel_for(shuffled.count(), plan.workers, [&](std::size_t k) {
        shuffled.samples[k] = guided_ddim(predictor, shuffled.samples[k], t, plan.full_prompt,
                                          plan.guidance_scale, sched);
    });
    return dilated_merge(window_unshuffle(shuffled, map));
}

HighResStepResult highres_step(const Latent3& z_hat, int t, const NoiseSchedule& sched,
                               const NoisePredictor& predictor, const HighResStepPlan& plan, double eta2) {
    HighResStepResult result;
    result.patch_branch = fuse_patches(denoise_patch_branch(z_hat, t, sched, predictor, plan), plan.layout);
    if (!plan.dilated_branch) {
        result.next = result.patch_branch;
        return result;
    }
    result.dilated = denoise_dilated_branch(z_hat, t, sched, predictor, plan);
    result.next = blend(result.patch_branch, *result.dilated, eta2);
    return result;
}

std::vector<PatchPrompt> stage_prompts(const PipelineConfig& config, const AttentionMaps& attention,
                                       std::size_t scale) {
    const BaseGeometry g = base_geometry(config);
    const std::size_t canvas_h = g.height * scale, canvas_w = g.width * scale;
    const PatchLayout layout = layout_windows(canvas_h, canvas_w, config.effective_window_h(),
                                              config.effective_window_w(), config.effective_stride_h(),
                                              config.effective_stride_w());
    if (!config.patch_prompts) {
        std::vector<PatchPrompt> prompts;
        const auto full = all_tokens(attention.token_count());
        for (std::size_t i = 0; i < layout.count(); ++i) {
            prompts.push_back({i, full, join_tokens(attention.tokens, full), false});
        }
        return prompts;
    }
    // Attention space is the latent grid divided by the capture downsample.
    if (g.height % attention.map_h != 0 || g.width % attention.map_w != 0 ||
        g.height / attention.map_h != g.width / attention.map_w) {
        config_error("attention map " + std::to_string(attention.map_h) + "x" + std::to_string(attention.map_w) +
                     " is not an integer downsample of base " + std::to_string(g.height) + "x" +
                     std::to_string(g.width));
    }
    const std::size_t ds = g.height / attention.map_h;
    const auto scaled = [ds](std::size_t v, const char* what) {
        if (v % ds != 0) config_error(std::string(what) + " not divisible by attention downsample");
        return v / ds;
    };
    const PatchLayout attn_layout = layout_windows(
        canvas_h / ds, canvas_w / ds, scaled(layout.window_h, "window height"),
        scaled(layout.window_w, "window width"), scaled(layout.stride_h, "stride height"),
        scaled(layout.stride_w, "stride width"));
    return patch_prompts(attention, attn_layout, {config.se_radius, config.c, config.fallback});
}

RunResult run(const PipelineConfig& config, const NoisePredictor& predictor, const AttentionSource& attention,
              const ProgressCallback& progress) {
    return run(config, make_schedule(config), predictor, attention, progress);
}

RunResult run(const PipelineConfig& config, const NoiseSchedule& sched, const NoisePredictor& predictor,
              const AttentionSource& attention, const ProgressCallback& progress) {
    config.validate();
    const BaseGeometry g = base_geometry(config);
    const int steps = sched.steps();

    RunResult result;
    LowResOptions low_opts;
    low_opts.progress = progress;
    LowResResult low = generate_low_res(config, sched, predictor, attention, low_opts);
    result.phase1_z0 = low.z0;
    result.attention = std::move(low.attention);

    Latent3 z0 = std::move(low.z0);
    const DecaySchedule skip_decay{steps, config.alpha1};
    const DecaySchedule dilated_decay{steps, config.alpha2};
    const PermutationFamily family =
        config.window_interaction ? config.shuffle_family : PermutationFamily::Identity;

    for (std::size_t s = 2; s <= g.scale; ++s) {
        StageArtifacts stage;
        stage.scale = s;
        const std::size_t canvas_h = g.height * s, canvas_w = g.width * s;
        stage.z0_upsampled = resize(z0, canvas_h, canvas_w, config.upsample);
        stage.prompts = stage_prompts(config, result.attention, s);
        stage.layout = layout_windows(canvas_h, canvas_w, config.effective_window_h(),
                                      config.effective_window_w(), config.effective_stride_h(),
                                      config.effective_stride_w());

        HighResStepPlan plan;
        plan.layout = stage.layout;
        for (const PatchPrompt& p : stage.prompts) plan.patch_tokens.push_back(p.token_indices);
        plan.full_prompt = all_tokens(result.attention.token_count());
        plan.dilation_h = s;
        plan.dilation_w = s;
        plan.guidance_scale = config.guidance_scale;
        plan.dilated_branch = config.dilated_branch;
        plan.family = family;
        plan.shuffle_seed = stage_seed(config.seed, static_cast<std::uint32_t>(s), Branch::Shuffle);
        plan.workers = config.workers;

        stage.inverted = noise_invert(stage.z0_upsampled, sched, config.seed, static_cast<std::uint32_t>(s));
        stage.eta1.assign(static_cast<std::size_t>(steps), 0.0);
        stage.eta2.assign(static_cast<std::size_t>(steps), 0.0);

        Latent3 z = stage.inverted.back();
        for (int t = steps; t >= 1; --t) {
            const auto idx = static_cast<std::size_t>(t - 1);
            const double e1 = eta(skip_decay, t);
            const double e2 = config.dilated_branch ? eta(dilated_decay, t - 1) : 0.0;
            stage.eta1[idx] = e1;
            stage.eta2[idx] = e2;
            const Latent3 z_hat = skip_residual(z, stage.inverted[idx], e1);
            try {
                z = highres_step(z_hat, t, sched, predictor, plan, e2).next;
            } catch (const Error& e) {
                throw Error(e.code(), "stage " + std::to_string(s) + " step " + std::to_string(t) + ": " + e.what());
            }
            if (progress) progress({s, steps - t + 1, steps});
        }
        stage.z0 = z;
        z0 = std::move(z);
        result.stages.push_back(std::move(stage));
    }
    result.final_latent = std::move(z0);
    return result;
}

}  // namespace accdiff
