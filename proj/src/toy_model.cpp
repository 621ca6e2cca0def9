#include "accdiff/toy_model.hpp"

#include <algorithm>
#include <cmath>

namespace accdiff {

OraclePredictor::OraclePredictor(Latent3 target, NoiseSchedule sched)
    : target_(std::move(target)), sched_(std::move(sched)) {}

Latent3 OraclePredictor::predict(const Latent3& z_t, int t, TokenSpan) const {
    require_same_shape(z_t, target_, "oracle predictor");
    if (t < 1 || t > sched_.steps()) {
        throw Error(ErrorCode::OutOfRange, "oracle predictor timestep " + std::to_string(t));
    }
    const double a = sched_.sqrt_alpha_bar(t);
    const double b = sched_.sqrt_one_minus_alpha_bar(t);
    if (b <= 0.0) throw Error(ErrorCode::OutOfRange, "oracle predictor undefined at alpha_bar = 1");
    Latent3 out(z_t.shape());
    auto dst = out.data();
    auto z = z_t.data();
    auto x0 = target_.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] = static_cast<float>((z[i] - a * x0[i]) / b);
    }
    return out;
}

void RoutedPredictor::add(Shape3 shape, std::shared_ptr<const NoisePredictor> predictor) {
    routes_.emplace_back(shape, std::move(predictor));
}

Latent3 RoutedPredictor::predict(const Latent3& z_t, int t, TokenSpan tokens) const {
    for (const auto& [shape, predictor] : routes_) {
        if (shape == z_t.shape()) return predictor->predict(z_t, t, tokens);
    }
    throw Error(ErrorCode::Contract, "no predictor routed for shape " + to_string(z_t.shape()));
}

std::vector<std::string> SynthScene::tokens() const {
    std::vector<std::string> out;
    out.reserve(blobs.size());
    for (const Blob& b : blobs) out.push_back(b.token);
    return out;
}

void SynthScene::validate() const {
    for (const Blob& b : blobs) {
        if (!(b.radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "blob '" + b.token + "' needs radius > 0");
        if (b.center_row < 0.0 || b.center_row > 1.0 || b.center_col < 0.0 || b.center_col > 1.0) {
            throw Error(ErrorCode::InvalidArgument, "blob '" + b.token + "' centre outside the unit square");
        }
        if (!(b.amplitude >= 0.0) || !std::isfinite(b.amplitude)) {
            throw Error(ErrorCode::InvalidArgument, "blob '" + b.token + "' needs a finite amplitude >= 0");
        }
    }
}

std::vector<double> render_blob(const Blob& blob, std::size_t height, std::size_t width) {
    std::vector<double> out(height * width, 0.0);
    const double cutoff2 = 9.0 * blob.radius * blob.radius;
    const double inv_two_var = 1.0 / (2.0 * blob.radius * blob.radius);
    for (std::size_t r = 0; r < height; ++r) {
        const double dy = (static_cast<double>(r) + 0.5) / static_cast<double>(height) - blob.center_row;
        for (std::size_t c = 0; c < width; ++c) {
            const double dx = (static_cast<double>(c) + 0.5) / static_cast<double>(width) - blob.center_col;
            const double d2 = dx * dx + dy * dy;
            if (d2 <= cutoff2) out[r * width + c] = blob.amplitude * std::exp(-d2 * inv_two_var);
        }
    }
    return out;
}

TokenFieldPredictor::TokenFieldPredictor(SynthScene scene, NoiseSchedule sched)
    : scene_(std::move(scene)), sched_(std::move(sched)) {
    scene_.validate();
}

std::vector<double> TokenFieldPredictor::field(std::size_t height, std::size_t width, TokenSpan tokens) const {
    std::vector<double> total(height * width, 0.0);
    for (std::size_t j : tokens) {
        if (j >= scene_.blobs.size()) {
            throw Error(ErrorCode::OutOfRange, "token index " + std::to_string(j) + " outside scene");
        }
        const std::vector<double> blob = render_blob(scene_.blobs[j], height, width);
        for (std::size_t i = 0; i < total.size(); ++i) total[i] += blob[i];
    }
    return total;
}

Latent3 TokenFieldPredictor::predict(const Latent3& z_t, int t, TokenSpan tokens) const {
    if (t < 1 || t > sched_.steps()) {
        throw Error(ErrorCode::OutOfRange, "token-field predictor timestep " + std::to_string(t));
    }
    const std::size_t h = z_t.height(), w = z_t.width(), ch = z_t.channels();
    const double inv_noise = 1.0 / sched_.sqrt_one_minus_alpha_bar(t);
    const std::vector<double> extra = field(h, w, tokens);
    Latent3 out(z_t.shape());
    for (std::size_t r = 0; r < h; ++r) {
        const std::size_t r0 = r > 0 ? r - 1 : 0, r1 = std::min(h - 1, r + 1);
        for (std::size_t c = 0; c < w; ++c) {
            const std::size_t c0 = c > 0 ? c - 1 : 0, c1 = std::min(w - 1, c + 1);
            const double n = static_cast<double>((r1 - r0 + 1) * (c1 - c0 + 1));
            for (std::size_t k = 0; k < ch; ++k) {
                double sum = 0.0;
                for (std::size_t rr = r0; rr <= r1; ++rr) {
                    for (std::size_t cc = c0; cc <= c1; ++cc) sum += z_t.at(rr, cc, k);
                }
                const double smooth = z_t.at(r, c, k) - sum / n;
                out.at(r, c, k) = static_cast<float>(smooth * inv_noise + extra[r * w + c]);
            }
        }
    }
    return out;
}

AttentionMaps synth_attention(const SynthScene& scene, std::size_t map_h, std::size_t map_w) {
    if (map_h == 0 || map_w == 0) throw Error(ErrorCode::InvalidArgument, "attention grid must be non-empty");
    scene.validate();
    AttentionMaps maps{map_h, map_w, scene.tokens(), std::vector<float>(map_h * map_w * scene.blobs.size())};
    const std::size_t m = scene.blobs.size();
    for (std::size_t j = 0; j < m; ++j) {
        const std::vector<double> blob = render_blob(scene.blobs[j], map_h, map_w);
        for (std::size_t i = 0; i < blob.size(); ++i) maps.values[i * m + j] = static_cast<float>(blob[i]);
    }
    return maps;
}

}  // namespace accdiff
