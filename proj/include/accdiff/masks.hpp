#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "accdiff/patch.hpp"

namespace accdiff {

/// Pixel-to-token attentiveness, N = map_h * map_w rows by M token columns.
/// values is row-major N x M.
struct AttentionMaps {
    std::size_t map_h = 0;
    std::size_t map_w = 0;
    std::vector<std::string> tokens;
    std::vector<float> values;

    std::size_t pixels() const noexcept { return map_h * map_w; }
    std::size_t token_count() const noexcept { return tokens.size(); }
    float at(std::size_t pixel, std::size_t token) const noexcept {
        return values[pixel * tokens.size() + token];
    }

    void validate() const;
};

class BinaryMask2D {
public:
    BinaryMask2D() = default;
    BinaryMask2D(std::size_t height, std::size_t width, std::uint8_t fill = 0)
        : height_(height), width_(width), bits_(height * width, fill ? 1 : 0) {}

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::uint8_t get(std::size_t r, std::size_t c) const noexcept { return bits_[r * width_ + c]; }
    void set(std::size_t r, std::size_t c, bool on) noexcept { bits_[r * width_ + c] = on ? 1 : 0; }
    std::size_t count_ones() const noexcept;
    const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

    friend bool operator==(const BinaryMask2D&, const BinaryMask2D&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<std::uint8_t> bits_;
};

/// One mask per token: bit set iff the value strictly exceeds the token
/// column's mean, reshaped row-major to map_h x map_w.
std::vector<BinaryMask2D> binarize(const AttentionMaps& maps);

/// Erosion then dilation with a (2r+1)^2 square; neighbourhoods are clipped at
/// the border. radius 0 is the identity.
BinaryMask2D open_mask(const BinaryMask2D& mask, std::size_t se_radius);

/// Nearest-neighbour upscale: out(r, c) = in(floor(r * H / out_h), floor(c * W / out_w)).
BinaryMask2D upscale_mask(const BinaryMask2D& mask, std::size_t out_h, std::size_t out_w);

std::vector<BinaryMask2D> mask_patches(const BinaryMask2D& mask, const PatchLayout& layout);

enum class FallbackPolicy { FullPrompt, Empty };

std::string_view to_string(FallbackPolicy policy) noexcept;
FallbackPolicy parse_fallback_policy(std::string_view name);

struct PatchPrompt {
    std::size_t patch_index = 0;
    std::vector<std::size_t> token_indices;  // 0-based, strictly increasing
    std::string text;
    bool fallback_used = false;

    friend bool operator==(const PatchPrompt&, const PatchPrompt&) = default;
};

/// Keeps token j iff ones(mask_j) / area > c (strict). masks[j] is the window
/// mask of token j for this patch.
PatchPrompt select_patch_prompt(std::size_t patch_index, const std::vector<BinaryMask2D>& masks,
                                const std::vector<std::string>& tokens, double c,
                                FallbackPolicy fallback = FallbackPolicy::FullPrompt);

/// Elementwise mean over records sharing (map_h, map_w, tokens).
AttentionMaps aggregate_attention(const std::vector<AttentionMaps>& records);

/// Full mask chain for every patch of a layout in attention space.
struct PromptMaskOptions {
    std::size_t se_radius = 1;
    double threshold = 0.3;
    FallbackPolicy fallback = FallbackPolicy::FullPrompt;
};

std::vector<PatchPrompt> patch_prompts(const AttentionMaps& maps, const PatchLayout& attention_layout,
                                       const PromptMaskOptions& options);

std::string join_tokens(const std::vector<std::string>& tokens, const std::vector<std::size_t>& indices);

/// Binary PGM (P5, maxval 255); set bits written as 255.
void write_pgm(const std::filesystem::path& path, const BinaryMask2D& mask);
/// Reads a P5 file and re-binarizes (pixel > 127).
BinaryMask2D read_pgm(const std::filesystem::path& path);

}  // namespace accdiff
