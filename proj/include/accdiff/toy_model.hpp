#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "accdiff/latent.hpp"
#include "accdiff/masks.hpp"
#include "accdiff/schedule.hpp"

namespace accdiff {

using TokenSpan = std::span<const std::size_t>;

/// Noise predictor eps_theta(z_t, t, tokens). Implementations must be
/// deterministic, return the input shape, and allow concurrent calls.
class NoisePredictor {
public:
    virtual ~NoisePredictor() = default;
    virtual Latent3 predict(const Latent3& z_t, int t, TokenSpan tokens) const = 0;
};

/// Exact-noise predictor for a known clean target: inverts forward diffusion.
class OraclePredictor final : public NoisePredictor {
public:
    OraclePredictor(Latent3 target, NoiseSchedule sched);
    Latent3 predict(const Latent3& z_t, int t, TokenSpan tokens) const override;

    const Latent3& target() const noexcept { return target_; }

private:
    Latent3 target_;
    NoiseSchedule sched_;
};

/// Dispatches on input shape, e.g. one oracle per stage resolution.
class RoutedPredictor final : public NoisePredictor {
public:
    void add(Shape3 shape, std::shared_ptr<const NoisePredictor> predictor);
    Latent3 predict(const Latent3& z_t, int t, TokenSpan tokens) const override;

private:
    std::vector<std::pair<Shape3, std::shared_ptr<const NoisePredictor>>> routes_;
};

/// Isotropic Gaussian truncated at 3 sigma, in unit-square coordinates.
struct Blob {
    std::string token;
    double center_row = 0.5;
    double center_col = 0.5;
    double radius = 0.1;  // sigma
    double amplitude = 1.0;
};

struct SynthScene {
    std::vector<Blob> blobs;

    std::vector<std::string> tokens() const;
    void validate() const;
};

/// Blob intensity sampled at pixel centres ((r + 0.5) / height, (c + 0.5) / width).
std::vector<double> render_blob(const Blob& blob, std::size_t height, std::size_t width);

/// Smoothing prior plus one additive field per included token:
///   eps = (z_t - box3x3(z_t)) / sqrt(1 - alpha_bar_t) + sum_{j in tokens} blob_j
/// The neighbourhood coupling makes the output depend on spatial arrangement,
/// so window interaction is observable; the field term makes prompts observable.
class TokenFieldPredictor final : public NoisePredictor {
public:
    TokenFieldPredictor(SynthScene scene, NoiseSchedule sched);
    Latent3 predict(const Latent3& z_t, int t, TokenSpan tokens) const override;

    /// Sum of the included blobs at the given spatial size, per cell.
    std::vector<double> field(std::size_t height, std::size_t width, TokenSpan tokens) const;

private:
    SynthScene scene_;
    NoiseSchedule sched_;
};

AttentionMaps synth_attention(const SynthScene& scene, std::size_t map_h, std::size_t map_w);

}  // namespace accdiff
