#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "accdiff/pipeline.hpp"

namespace accdiff {

// Capture manifest written by the model bridge. Paths are relative to the
// manifest's directory; timesteps use the sampler's 1..T numbering.
//
// {
//   "model": "...",
//   "tokens": ["Astronaut", "on", ...],
//   "token_indices": [1, 2, ...],          // tokenizer positions, optional
//   "latent": {"height": H, "width": W, "channels": C},
//   "alpha_bar": [ab_1, ..., ab_T],         // optional model schedule
//   "initial_latent": "z_T.acct",
//   "attention": [{"timestep": t, "layer": "...", "heads": n,
//                  "map_h": h, "map_w": w, "file": "..."}],   // [h*w, M] f32
//   "eps": [{"timestep": t, "file": "..."}],                   // [H, W, C] f32
//   "trajectory": [{"timestep": t, "file": "..."}]             // z_t after the update
// }

struct AttentionRecord {
    int timestep = 0;
    std::string layer;
    std::size_t heads = 1;
    std::size_t map_h = 0;
    std::size_t map_w = 0;
    std::filesystem::path file;
};

struct StepRecord {
    int timestep = 0;
    std::filesystem::path file;
};

struct CaptureManifest {
    std::string model;
    std::vector<std::string> tokens;
    std::vector<int> token_indices;
    Shape3 latent;
    std::vector<double> alpha_bar;
    std::filesystem::path initial_latent;
    std::vector<AttentionRecord> attention;
    std::vector<StepRecord> eps;
    std::vector<StepRecord> trajectory;

    bool empty() const noexcept { return eps.empty() && attention.empty(); }
};

/// Parses and checks that every referenced file exists.
CaptureManifest load_manifest(const std::filesystem::path& path);

AttentionMaps load_attention_record(const AttentionRecord& record, const std::vector<std::string>& tokens);

/// Replays recorded attention maps keyed by timestep.
class RecordedAttention final : public AttentionSource {
public:
    explicit RecordedAttention(const CaptureManifest& manifest);
    std::vector<std::string> tokens() const override { return tokens_; }
    std::vector<AttentionMaps> capture(int t, const Latent3& z_t) const override;

private:
    std::vector<std::string> tokens_;
    std::map<int, std::vector<AttentionMaps>> by_step_;
};

/// Returns the recorded post-guidance noise for step t, ignoring tokens.
class RecordedPredictor final : public NoisePredictor {
public:
    explicit RecordedPredictor(const CaptureManifest& manifest);
    Latent3 predict(const Latent3& z_t, int t, TokenSpan tokens) const override;

private:
    std::map<int, Latent3> eps_;
};

struct ReplayReport {
    int steps = 0;
    std::optional<int> first_divergent_step;
    double max_error = 0.0;
    std::vector<Latent3> trajectory;  // index t: z_t produced by the replay, t = 0..T-1
};

/// Runs the phase-1 DDIM path from the recorded z_T using recorded noise and
/// compares each z_t against the recorded trajectory (when present).
ReplayReport replay_phase1(const CaptureManifest& manifest, double tolerance);

}  // namespace accdiff
