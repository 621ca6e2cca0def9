#include "accdiff/resample.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace accdiff {

std::string_view to_string(UpsampleKernel kernel) noexcept {
    switch (kernel) {
        case UpsampleKernel::Bicubic: return "bicubic";
        case UpsampleKernel::Bilinear: return "bilinear";
        case UpsampleKernel::Nearest: return "nearest";
    }
    return "bicubic";
}

UpsampleKernel parse_upsample_kernel(std::string_view name) {
    if (name == "bicubic") return UpsampleKernel::Bicubic;
    if (name == "bilinear") return UpsampleKernel::Bilinear;
    if (name == "nearest") return UpsampleKernel::Nearest;
    throw Error(ErrorCode::InvalidArgument, "unknown upsample kernel '" + std::string(name) + "'");
}

namespace {

struct Taps {
    std::array<std::size_t, 4> index{};
    std::array<double, 4> weight{};
    int count = 0;
};

double cubic(double x) {
    constexpr double a = -0.75;
    x = std::abs(x);
    if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
    return 0.0;
}

std::vector<Taps> axis_taps(std::size_t in, std::size_t out, UpsampleKernel kernel) {
    std::vector<Taps> taps(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    const auto clamp = [in](long i) {
        return static_cast<std::size_t>(std::clamp<long>(i, 0, static_cast<long>(in) - 1));
    };
    for (std::size_t o = 0; o < out; ++o) {
        Taps& t = taps[o];
        if (kernel == UpsampleKernel::Nearest) {
            t.count = 1;
            t.index[0] = std::min(in - 1, static_cast<std::size_t>(std::floor(static_cast<double>(o) * scale)));
            t.weight[0] = 1.0;
            continue;
        }
        double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
        if (kernel == UpsampleKernel::Bilinear) {
            src = std::max(src, 0.0);
            const auto i0 = static_cast<long>(std::floor(src));
            const double f = src - static_cast<double>(i0);
            t.count = 2;
            t.index = {clamp(i0), clamp(i0 + 1), 0, 0};
            t.weight = {1.0 - f, f, 0.0, 0.0};
            continue;
        }
        const auto i0 = static_cast<long>(std::floor(src));
        const double f = src - static_cast<double>(i0);
        t.count = 4;
        for (int k = 0; k < 4; ++k) {
            t.index[static_cast<std::size_t>(k)] = clamp(i0 - 1 + k);
            t.weight[static_cast<std::size_t>(k)] = cubic(f - (k - 1));
        }
    }
    return taps;
}

}  // namespace

Latent3 resize(const Latent3& in, std::size_t out_h, std::size_t out_w, UpsampleKernel kernel) {
    if (in.empty() || out_h == 0 || out_w == 0) {
        throw Error(ErrorCode::InvalidArgument, "resize needs non-empty input and output");
    }
    if (out_h == in.height() && out_w == in.width()) return in;
    const auto rows = axis_taps(in.height(), out_h, kernel);
    const auto cols = axis_taps(in.width(), out_w, kernel);
    const std::size_t ch = in.channels();

    // Separable: columns first into a double buffer, then rows.
    std::vector<double> tmp(in.height() * out_w * ch, 0.0);
    for (std::size_t r = 0; r < in.height(); ++r) {
        for (std::size_t c = 0; c < out_w; ++c) {
            const Taps& t = cols[c];
            for (std::size_t k = 0; k < ch; ++k) {
                double acc = 0.0;
                for (int i = 0; i < t.count; ++i) {
                    acc += t.weight[static_cast<std::size_t>(i)] * in.at(r, t.index[static_cast<std::size_t>(i)], k);
                }
                tmp[(r * out_w + c) * ch + k] = acc;
            }
        }
    }
    Latent3 out({out_h, out_w, ch});
    for (std::size_t r = 0; r < out_h; ++r) {
        const Taps& t = rows[r];
        for (std::size_t c = 0; c < out_w; ++c) {
            for (std::size_t k = 0; k < ch; ++k) {
                double acc = 0.0;
                for (int i = 0; i < t.count; ++i) {
                    acc += t.weight[static_cast<std::size_t>(i)] * tmp[(t.index[static_cast<std::size_t>(i)] * out_w + c) * ch + k];
                }
                out.at(r, c, k) = static_cast<float>(acc);
            }
        }
    }
    return out;
}

}  // namespace accdiff
