#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "accdiff/dilated.hpp"
#include "accdiff/masks.hpp"
#include "accdiff/patch.hpp"
#include "accdiff/resample.hpp"
#include "accdiff/schedule.hpp"
#include "accdiff/toy_model.hpp"

namespace accdiff {

struct PipelineConfig {
    // Sampler
    int steps = 50;
    double beta_start = 1e-4;
    double beta_end = 2e-2;
    double guidance_scale = 7.5;

    // Pretrained latent size; patch windows default to this size.
    std::size_t latent_h = 128;
    std::size_t latent_w = 128;
    std::size_t channels = 4;
    std::size_t target_h = 256;
    std::size_t target_w = 256;
    std::size_t window_h = 0;  // 0: latent_h
    std::size_t window_w = 0;  // 0: latent_w
    std::size_t stride_h = 0;  // 0: window_h / 2
    std::size_t stride_w = 0;  // 0: window_w / 2

    // Cosine decay exponents: alpha1 drives the skip residual, alpha2 the
    // dilated-branch blend. alpha3 is accepted for parity and unused.
    double alpha1 = 3.0;
    double alpha2 = 1.0;
    double alpha3 = 1.0;

    // Patch-content-aware prompts
    double c = 0.3;
    std::size_t se_radius = 1;
    std::size_t attention_downsample = 1;
    FallbackPolicy fallback = FallbackPolicy::FullPrompt;

    std::uint64_t seed = 0;
    PermutationFamily shuffle_family = PermutationFamily::Uniform;
    UpsampleKernel upsample = UpsampleKernel::Bicubic;
    std::size_t workers = 1;

    // Ablation switches
    bool patch_prompts = true;
    bool window_interaction = true;
    bool dilated_branch = true;

    SynthScene scene;
    std::string attention_source = "synthetic";  // or "recorded"
    std::string manifest_path;
    std::string output_dir = "out";

    std::size_t effective_window_h() const noexcept { return window_h ? window_h : latent_h; }
    std::size_t effective_window_w() const noexcept { return window_w ? window_w : latent_w; }
    std::size_t effective_stride_h() const noexcept { return stride_h ? stride_h : effective_window_h() / 2; }
    std::size_t effective_stride_w() const noexcept { return stride_w ? stride_w : effective_window_w() / 2; }

    void validate() const;
};

/// Phase-1 latent size: the target aspect ratio with the longer side at the
/// pretrained size, and the integer side scale that reaches the target.
struct BaseGeometry {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t scale = 1;
};

BaseGeometry base_geometry(const PipelineConfig& config);

NoiseSchedule make_schedule(const PipelineConfig& config);

/// Supplies cross-attention records observed while denoising phase 1.
class AttentionSource {
public:
    virtual ~AttentionSource() = default;
    virtual std::vector<std::string> tokens() const = 0;
    /// Records captured at step t for the phase-1 latent z_t.
    virtual std::vector<AttentionMaps> capture(int t, const Latent3& z_t) const = 0;
};

class SyntheticAttention final : public AttentionSource {
public:
    SyntheticAttention(SynthScene scene, std::size_t map_h, std::size_t map_w);
    std::vector<std::string> tokens() const override { return maps_.tokens; }
    std::vector<AttentionMaps> capture(int, const Latent3&) const override { return {maps_}; }

private:
    AttentionMaps maps_;
};

struct ProgressEvent {
    std::size_t stage = 1;  // 1 = phase 1, otherwise the side scale
    int step = 0;
    int total_steps = 0;
};

using ProgressCallback = std::function<void(const ProgressEvent&)>;

struct LowResOptions {
    std::optional<Latent3> initial;  // replaces the seeded z_T
    std::function<void(int t, const Latent3& z_prev)> on_step;
    ProgressCallback progress;
};

struct LowResResult {
    Latent3 z0;
    AttentionMaps attention;
};

LowResResult generate_low_res(const PipelineConfig& config, const NoiseSchedule& sched,
                              const NoisePredictor& predictor, const AttentionSource& attention,
                              const LowResOptions& options = {});

/// Series index t - 1 holds sqrt(ab_t) Z0 + sqrt(1 - ab_t) eps_t, with eps_t
/// drawn from the stream (seed, stage, t).
std::vector<Latent3> noise_invert(const Latent3& z0, const NoiseSchedule& sched, std::uint64_t seed,
                                  std::uint32_t stage = 0);

/// eta1 * inverted + (1 - eta1) * current.
Latent3 skip_residual(const Latent3& current, const Latent3& inverted, double eta1);

/// One guided DDIM update: predictor runs with no tokens and with `tokens`,
/// combined by classifier-free guidance.
Latent3 guided_ddim(const NoisePredictor& predictor, const Latent3& z_t, int t, TokenSpan tokens,
                    double guidance_scale, const NoiseSchedule& sched);

struct HighResStepPlan {
    PatchLayout layout;
    std::vector<std::vector<std::size_t>> patch_tokens;  // one per window
    std::vector<std::size_t> full_prompt;
    std::size_t dilation_h = 1;
    std::size_t dilation_w = 1;
    double guidance_scale = 7.5;
    bool dilated_branch = true;
    PermutationFamily family = PermutationFamily::Uniform;
    std::uint64_t shuffle_seed = 0;
    std::size_t workers = 1;
};

/// Per-window denoised patches, in layout order.
std::vector<Latent3> denoise_patch_branch(const Latent3& z_hat, int t, const NoiseSchedule& sched,
                                          const NoisePredictor& predictor, const HighResStepPlan& plan);

/// Dilated samples shuffled, denoised with the full prompt, unshuffled, merged.
Latent3 denoise_dilated_branch(const Latent3& z_hat, int t, const NoiseSchedule& sched,
                               const NoisePredictor& predictor, const HighResStepPlan& plan);

struct HighResStepResult {
    Latent3 next;
    Latent3 patch_branch;
    std::optional<Latent3> dilated;
};

/// Z_{t-1} = eta2 * dilated + (1 - eta2) * fused patches.
HighResStepResult highres_step(const Latent3& z_hat, int t, const NoiseSchedule& sched,
                               const NoisePredictor& predictor, const HighResStepPlan& plan, double eta2);

struct StageArtifacts {
    std::size_t scale = 1;
    Latent3 z0_upsampled;
    std::vector<Latent3> inverted;  // index t - 1
    std::vector<double> eta1;       // index t - 1: skip-residual weight at step t
    std::vector<double> eta2;       // index t - 1: dilated weight applied at step t
    std::vector<PatchPrompt> prompts;
    PatchLayout layout;
    Latent3 z0;
};

struct RunResult {
    Latent3 final_latent;
    Latent3 phase1_z0;
    AttentionMaps attention;
    std::vector<StageArtifacts> stages;
};

/// Patch prompts for one stage, computed from phase-1 attention in attention
/// space. Honors config.patch_prompts (off: every window gets the full prompt).
std::vector<PatchPrompt> stage_prompts(const PipelineConfig& config, const AttentionMaps& attention,
                                       std::size_t scale);

RunResult run(const PipelineConfig& config, const NoisePredictor& predictor, const AttentionSource& attention,
              const ProgressCallback& progress = {});

/// Same, with an explicit schedule (e.g. a recorded model schedule).
RunResult run(const PipelineConfig& config, const NoiseSchedule& sched, const NoisePredictor& predictor,
              const AttentionSource& attention, const ProgressCallback& progress = {});

}  // namespace accdiff
