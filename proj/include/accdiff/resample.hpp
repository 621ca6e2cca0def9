#pragma once

#include <cstddef>
#include <string_view>

#include "accdiff/latent.hpp"

namespace accdiff {

enum class UpsampleKernel { Bicubic, Bilinear, Nearest };

std::string_view to_string(UpsampleKernel kernel) noexcept;
UpsampleKernel parse_upsample_kernel(std::string_view name);

/// Half-pixel-centre resize (align_corners = false), edge-clamped taps.
/// Bicubic uses the Keys kernel with a = -0.75.
Latent3 resize(const Latent3& in, std::size_t out_h, std::size_t out_w, UpsampleKernel kernel);

}  // namespace accdiff
