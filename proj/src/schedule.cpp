#include "accdiff/schedule.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace accdiff {

NoiseSchedule::NoiseSchedule(std::vector<double> alpha_bar) : alpha_bar_(std::move(alpha_bar)) {
    if (alpha_bar_.empty()) {
        throw Error(ErrorCode::OutOfRange, "noise schedule needs at least one step");
    }
    for (std::size_t i = 0; i < alpha_bar_.size(); ++i) {
        const double a = alpha_bar_[i];
        if (!(a > 0.0 && a < 1.0)) {
            throw Error(ErrorCode::OutOfRange, "alpha_bar must lie in (0, 1), got " + std::to_string(a));
        }
        if (i > 0 && !(a < alpha_bar_[i - 1])) {
            throw Error(ErrorCode::OutOfRange, "alpha_bar must be strictly decreasing");
        }
    }
    sqrt_ab_.reserve(alpha_bar_.size() + 1);
    sqrt_1mab_.reserve(alpha_bar_.size() + 1);
    sqrt_ab_.push_back(1.0);
    sqrt_1mab_.push_back(0.0);
    for (double a : alpha_bar_) {
        sqrt_ab_.push_back(std::sqrt(a));
        sqrt_1mab_.push_back(std::sqrt(1.0 - a));
    }
}

void NoiseSchedule::check_step(int t) const {
    if (t < 0 || t > steps()) {
        throw Error(ErrorCode::OutOfRange,
                    "timestep " + std::to_string(t) + " outside [0, " + std::to_string(steps()) + "]");
    }
}

double NoiseSchedule::alpha_bar(int t) const {
    check_step(t);
    return t == 0 ? 1.0 : alpha_bar_[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::sqrt_alpha_bar(int t) const {
    check_step(t);
    return sqrt_ab_[static_cast<std::size_t>(t)];
}

double NoiseSchedule::sqrt_one_minus_alpha_bar(int t) const {
    check_step(t);
    return sqrt_1mab_[static_cast<std::size_t>(t)];
}

NoiseSchedule make_schedule(int steps, double beta_start, double beta_end) {
    if (steps < 1) throw Error(ErrorCode::OutOfRange, "schedule needs T >= 1");
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
        throw Error(ErrorCode::OutOfRange, "betas must satisfy 0 < beta_start <= beta_end < 1");
    }
    std::vector<double> alpha_bar(static_cast<std::size_t>(steps));
    double running = 1.0;
    for (int i = 0; i < steps; ++i) {
        const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
        const double beta = beta_start + frac * (beta_end - beta_start);
        running *= 1.0 - beta;
        alpha_bar[static_cast<std::size_t>(i)] = running;
    }
    return NoiseSchedule(std::move(alpha_bar));
}

namespace {

void require_signal_step(int t, const NoiseSchedule& sched) {
    if (t < 1 || t > sched.steps()) {
        throw Error(ErrorCode::OutOfRange,
                    "timestep " + std::to_string(t) + " outside [1, " + std::to_string(sched.steps()) + "]");
    }
}

}  // namespace

Latent3 forward_diffuse(const Latent3& z0, int t, const Latent3& eps, const NoiseSchedule& sched) {
    require_signal_step(t, sched);
    require_same_shape(z0, eps, "forward_diffuse");
    const double a = sched.sqrt_alpha_bar(t);
    const double b = sched.sqrt_one_minus_alpha_bar(t);
    Latent3 out(z0.shape());
    auto dst = out.data();
    auto x = z0.data();
    auto e = eps.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] = static_cast<float>(a * x[i] + b * e[i]);
    }
    return out;
}

Latent3 ddim_step(const Latent3& z_t, const Latent3& eps_pred, int t, const NoiseSchedule& sched) {
    require_signal_step(t, sched);
    require_same_shape(z_t, eps_pred, "ddim_step");
    const double a_t = sched.sqrt_alpha_bar(t);
    const double b_t = sched.sqrt_one_minus_alpha_bar(t);
    const double a_prev = sched.sqrt_alpha_bar(t - 1);
    const double b_prev = sched.sqrt_one_minus_alpha_bar(t - 1);
    Latent3 out(z_t.shape());
    auto dst = out.data();
    auto z = z_t.data();
    auto e = eps_pred.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        const double z0_hat = (z[i] - b_t * e[i]) / a_t;
        dst[i] = static_cast<float>(a_prev * z0_hat + b_prev * e[i]);
    }
    return out;
}

Latent3 cfg_combine(const Latent3& eps_uncond, const Latent3& eps_cond, double scale) {
    require_same_shape(eps_uncond, eps_cond, "cfg_combine");
    Latent3 out(eps_uncond.shape());
    auto dst = out.data();
    auto u = eps_uncond.data();
    auto c = eps_cond.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] = static_cast<float>(u[i] + scale * (static_cast<double>(c[i]) - u[i]));
    }
    return out;
}

double eta(const DecaySchedule& sched, int t) {
    if (sched.steps < 1) throw Error(ErrorCode::OutOfRange, "decay schedule needs T >= 1");
    if (t < 0 || t > sched.steps) {
        throw Error(ErrorCode::OutOfRange, "decay timestep " + std::to_string(t) + " outside [0, " +
                                               std::to_string(sched.steps) + "]");
    }
    if (sched.exponent < 0.0) throw Error(ErrorCode::OutOfRange, "decay exponent must be >= 0");
    if (t == sched.steps) return 1.0;
    if (t == 0) return 0.0;
    const double base = 0.5 * (1.0 + std::cos(std::numbers::pi * (sched.steps - t) / sched.steps));
    return std::pow(base, sched.exponent);
}

}  // namespace accdiff
