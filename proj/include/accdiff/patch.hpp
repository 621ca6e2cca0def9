#pragma once

#include <cstddef>
#include <vector>

#include "accdiff/latent.hpp"

namespace accdiff {

struct Origin {
    std::size_t row = 0;
    std::size_t col = 0;
    friend bool operator==(const Origin&, const Origin&) = default;
};

/// Shifted-window grid over a canvas. Origins are row-major.
struct PatchLayout {
    std::size_t canvas_h = 0, canvas_w = 0;
    std::size_t window_h = 0, window_w = 0;
    std::size_t stride_h = 0, stride_w = 0;
    std::vector<Origin> origins;

    std::size_t rows() const noexcept { return (canvas_h - window_h) / stride_h + 1; }
    std::size_t cols() const noexcept { return (canvas_w - window_w) / stride_w + 1; }
    std::size_t count() const noexcept { return origins.size(); }
};

/// Rejects layouts whose window count would be fractional; no clamping.
PatchLayout layout_windows(std::size_t canvas_h, std::size_t canvas_w, std::size_t window_h,
                           std::size_t window_w, std::size_t stride_h, std::size_t stride_w);

std::vector<Latent3> extract_patches(const Latent3& canvas, const PatchLayout& layout);

/// Overlap-averaged reconstruction: per-cell sum of covering patch values
/// divided once by the coverage count.
Latent3 fuse_patches(const std::vector<Latent3>& patches, const PatchLayout& layout);

/// Number of windows covering each canvas cell, row-major canvas_h x canvas_w.
std::vector<std::size_t> coverage_counts(const PatchLayout& layout);

}  // namespace accdiff
