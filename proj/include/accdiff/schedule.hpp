#pragma once

#include <vector>

#include "accdiff/latent.hpp"

namespace accdiff {

/// Cumulative signal fractions alpha_bar[1..T]; alpha_bar(0) is defined as 1.
class NoiseSchedule {
public:
    /// Takes alpha_bar_1..alpha_bar_T. Must be strictly decreasing inside (0, 1).
    explicit NoiseSchedule(std::vector<double> alpha_bar);

    int steps() const noexcept { return static_cast<int>(alpha_bar_.size()); }
    /// t in [0, T]; t = 0 yields 1.
    double alpha_bar(int t) const;
    double sqrt_alpha_bar(int t) const;
    double sqrt_one_minus_alpha_bar(int t) const;
    const std::vector<double>& alpha_bars() const noexcept { return alpha_bar_; }

private:
    void check_step(int t) const;

    std::vector<double> alpha_bar_;
    std::vector<double> sqrt_ab_;
    std::vector<double> sqrt_1mab_;
};

/// Linear beta schedule: beta_t interpolated from beta_start to beta_end over
/// T steps, alpha_bar_t the cumulative product of (1 - beta_t).
NoiseSchedule make_schedule(int steps, double beta_start, double beta_end);

/// sqrt(alpha_bar_t) * z0 + sqrt(1 - alpha_bar_t) * eps.
Latent3 forward_diffuse(const Latent3& z0, int t, const Latent3& eps, const NoiseSchedule& sched);

/// Deterministic DDIM update z_t -> z_{t-1} via the clean-latent estimate.
Latent3 ddim_step(const Latent3& z_t, const Latent3& eps_pred, int t, const NoiseSchedule& sched);

/// Classifier-free guidance: uncond + scale * (cond - uncond).
Latent3 cfg_combine(const Latent3& eps_uncond, const Latent3& eps_cond, double scale);

/// Cosine decay weight raised to `exponent`: 1 at t = T, 0 at t = 0.
struct DecaySchedule {
    int steps = 1;
    double exponent = 1.0;
};

double eta(const DecaySchedule& sched, int t);

}  // namespace accdiff
