#include "accdiff/patch.hpp"

#include <string>

namespace accdiff {

PatchLayout layout_windows(std::size_t canvas_h, std::size_t canvas_w, std::size_t window_h,
                           std::size_t window_w, std::size_t stride_h, std::size_t stride_w) {
    if (window_h == 0 || window_w == 0 || stride_h == 0 || stride_w == 0) {
        throw Error(ErrorCode::InvalidArgument, "window and stride sizes must be positive");
    }
    if (window_h > canvas_h || window_w > canvas_w) {
        throw Error(ErrorCode::WindowExceedsCanvas,
                    "window " + std::to_string(window_h) + "x" + std::to_string(window_w) +
                        " exceeds canvas " + std::to_string(canvas_h) + "x" + std::to_string(canvas_w));
    }
    if ((canvas_h - window_h) % stride_h != 0 || (canvas_w - window_w) % stride_w != 0) {
        throw Error(ErrorCode::Divisibility,
                    "canvas minus window must be divisible by stride (" + std::to_string(canvas_h) + "-" +
                        std::to_string(window_h) + " by " + std::to_string(stride_h) + ", " +
                        std::to_string(canvas_w) + "-" + std::to_string(window_w) + " by " +
                        std::to_string(stride_w) + ")");
    }
    PatchLayout layout{canvas_h, canvas_w, window_h, window_w, stride_h, stride_w, {}};
    layout.origins.reserve(layout.rows() * layout.cols());
    for (std::size_t r = 0; r < layout.rows(); ++r) {
        for (std::size_t c = 0; c < layout.cols(); ++c) {
            layout.origins.push_back({r * stride_h, c * stride_w});
        }
    }
    return layout;
}

std::vector<Latent3> extract_patches(const Latent3& canvas, const PatchLayout& layout) {
    if (canvas.height() != layout.canvas_h || canvas.width() != layout.canvas_w) {
        throw Error(ErrorCode::ShapeMismatch, "canvas " + to_string(canvas.shape()) +
                                                  " does not match layout " + std::to_string(layout.canvas_h) +
                                                  "x" + std::to_string(layout.canvas_w));
    }
    std::vector<Latent3> patches;
    patches.reserve(layout.count());
    for (const Origin& o : layout.origins) {
        patches.push_back(LatentView(canvas, o.row, o.col, layout.window_h, layout.window_w).materialize());
    }
    return patches;
}

Latent3 fuse_patches(const std::vector<Latent3>& patches, const PatchLayout& layout) {
    if (patches.size() != layout.count() || patches.empty()) {
        throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(layout.count()) + " patches, got " +
                                                  std::to_string(patches.size()));
    }
    const std::size_t channels = patches.front().channels();
    for (const Latent3& p : patches) {
        if (p.height() != layout.window_h || p.width() != layout.window_w || p.channels() != channels) {
            throw Error(ErrorCode::ShapeMismatch, "patch shape " + to_string(p.shape()) + " does not match window");
        }
    }
    const Shape3 shape{layout.canvas_h, layout.canvas_w, channels};
    std::vector<double> sum(shape.size(), 0.0);
    std::vector<std::size_t> count(layout.canvas_h * layout.canvas_w, 0);
    for (std::size_t i = 0; i < patches.size(); ++i) {
        const Origin& o = layout.origins[i];
        const Latent3& p = patches[i];
        for (std::size_t r = 0; r < layout.window_h; ++r) {
            for (std::size_t c = 0; c < layout.window_w; ++c) {
                const std::size_t cell = (o.row + r) * layout.canvas_w + (o.col + c);
                ++count[cell];
                for (std::size_t ch = 0; ch < channels; ++ch) {
                    sum[cell * channels + ch] += p.at(r, c, ch);
                }
            }
        }
    }
    Latent3 out(shape);
    auto dst = out.data();
    for (std::size_t cell = 0; cell < count.size(); ++cell) {
        for (std::size_t ch = 0; ch < channels; ++ch) {
            dst[cell * channels + ch] = static_cast<float>(sum[cell * channels + ch] / static_cast<double>(count[cell]));
        }
    }
    return out;
}

std::vector<std::size_t> coverage_counts(const PatchLayout& layout) {
    std::vector<std::size_t> count(layout.canvas_h * layout.canvas_w, 0);
    for (const Origin& o : layout.origins) {
        for (std::size_t r = 0; r < layout.window_h; ++r) {
            for (std::size_t c = 0; c < layout.window_w; ++c) {
                ++count[(o.row + r) * layout.canvas_w + o.col + c];
            }
        }
    }
    return count;
}

}  // namespace accdiff
