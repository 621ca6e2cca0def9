#include "accdiff/masks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "accdiff/tensor_file.hpp"

namespace accdiff {

void AttentionMaps::validate() const {
    if (map_h == 0 || map_w == 0) throw Error(ErrorCode::ShapeMismatch, "attention map has zero extent");
    if (values.size() != pixels() * tokens.size()) {
        throw Error(ErrorCode::ShapeMismatch, "attention values length " + std::to_string(values.size()) +
                                                  " != " + std::to_string(pixels()) + " x " +
                                                  std::to_string(tokens.size()));
    }
    for (float v : values) {
        if (!std::isfinite(v) || v < 0.0f) {
            throw Error(ErrorCode::InvalidArgument, "attention values must be finite and nonnegative");
        }
    }
}

std::size_t BinaryMask2D::count_ones() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::vector<BinaryMask2D> binarize(const AttentionMaps& maps) {
    maps.validate();
    const std::size_t n = maps.pixels();
    std::vector<BinaryMask2D> masks;
    masks.reserve(maps.token_count());
    for (std::size_t j = 0; j < maps.token_count(); ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += maps.at(i, j);
        const double mean = sum / static_cast<double>(n);
        BinaryMask2D mask(maps.map_h, maps.map_w);
        for (std::size_t i = 0; i < n; ++i) {
            mask.set(i / maps.map_w, i % maps.map_w, static_cast<double>(maps.at(i, j)) > mean);
        }
        masks.push_back(std::move(mask));
    }
    return masks;
}

namespace {

// Windowed min (erode) or max (dilate) over the clipped square neighbourhood.
BinaryMask2D morph(const BinaryMask2D& in, std::size_t radius, bool erode) {
    const std::size_t h = in.height(), w = in.width();
    BinaryMask2D out(h, w);
    for (std::size_t r = 0; r < h; ++r) {
        const std::size_t r0 = r >= radius ? r - radius : 0, r1 = std::min(h - 1, r + radius);
        for (std::size_t c = 0; c < w; ++c) {
            const std::size_t c0 = c >= radius ? c - radius : 0, c1 = std::min(w - 1, c + radius);
            bool value = erode;
            for (std::size_t rr = r0; rr <= r1 && value == erode; ++rr) {
                for (std::size_t cc = c0; cc <= c1; ++cc) {
                    if ((in.get(rr, cc) != 0) != erode) {
                        value = !erode;
                        break;
                    }
                }
            }
            out.set(r, c, value);
        }
    }
    return out;
}

}  // namespace

BinaryMask2D open_mask(const BinaryMask2D& mask, std::size_t se_radius) {
    if (se_radius == 0 || mask.height() == 0 || mask.width() == 0) return mask;
    return morph(morph(mask, se_radius, true), se_radius, false);
}

BinaryMask2D upscale_mask(const BinaryMask2D& mask, std::size_t out_h, std::size_t out_w) {
    if (out_h < mask.height() || out_w < mask.width()) {
        throw Error(ErrorCode::InvalidArgument, "upscale_mask cannot downscale " + std::to_string(mask.height()) +
                                                    "x" + std::to_string(mask.width()) + " to " +
                                                    std::to_string(out_h) + "x" + std::to_string(out_w));
    }
    BinaryMask2D out(out_h, out_w);
    for (std::size_t r = 0; r < out_h; ++r) {
        const std::size_t sr = r * mask.height() / out_h;
        for (std::size_t c = 0; c < out_w; ++c) {
            out.set(r, c, mask.get(sr, c * mask.width() / out_w) != 0);
        }
    }
    return out;
}

std::vector<BinaryMask2D> mask_patches(const BinaryMask2D& mask, const PatchLayout& layout) {
    if (mask.height() != layout.canvas_h || mask.width() != layout.canvas_w) {
        throw Error(ErrorCode::ShapeMismatch, "mask " + std::to_string(mask.height()) + "x" +
                                                  std::to_string(mask.width()) + " does not match layout canvas");
    }
    std::vector<BinaryMask2D> out;
    out.reserve(layout.count());
    for (const Origin& o : layout.origins) {
        BinaryMask2D patch(layout.window_h, layout.window_w);
        for (std::size_t r = 0; r < layout.window_h; ++r) {
            for (std::size_t c = 0; c < layout.window_w; ++c) {
                patch.set(r, c, mask.get(o.row + r, o.col + c) != 0);
            }
        }
        out.push_back(std::move(patch));
    }
    return out;
}

std::string_view to_string(FallbackPolicy policy) noexcept {
    return policy == FallbackPolicy::FullPrompt ? "full" : "empty";
}

FallbackPolicy parse_fallback_policy(std::string_view name) {
    if (name == "full") return FallbackPolicy::FullPrompt;
    if (name == "empty") return FallbackPolicy::Empty;
    throw Error(ErrorCode::InvalidArgument, "unknown fallback policy '" + std::string(name) + "'");
}

std::string join_tokens(const std::vector<std::string>& tokens, const std::vector<std::size_t>& indices) {
    std::string text;
    for (std::size_t idx : indices) {
        if (!text.empty()) text += ' ';
        text += tokens.at(idx);
    }
    return text;
}

PatchPrompt select_patch_prompt(std::size_t patch_index, const std::vector<BinaryMask2D>& masks,
                                const std::vector<std::string>& tokens, double c, FallbackPolicy fallback) {
    if (!(c > 0.0 && c < 1.0)) {
        throw Error(ErrorCode::OutOfRange, "prompt threshold c must lie in (0, 1), got " + std::to_string(c));
    }
    if (masks.size() != tokens.size()) {
        throw Error(ErrorCode::ShapeMismatch, std::to_string(masks.size()) + " masks for " +
                                                  std::to_string(tokens.size()) + " tokens");
    }
    PatchPrompt prompt{patch_index, {}, {}, false};
    for (std::size_t j = 0; j < masks.size(); ++j) {
        const BinaryMask2D& m = masks[j];
        if (m.height() != masks.front().height() || m.width() != masks.front().width()) {
            throw Error(ErrorCode::ShapeMismatch, "patch masks must share one window shape");
        }
        const double area = static_cast<double>(m.height() * m.width());
        if (area > 0.0 && static_cast<double>(m.count_ones()) / area > c) prompt.token_indices.push_back(j);
    }
    if (prompt.token_indices.empty()) {
        prompt.fallback_used = true;
        if (fallback == FallbackPolicy::FullPrompt) {
            prompt.token_indices.resize(tokens.size());
            std::iota(prompt.token_indices.begin(), prompt.token_indices.end(), std::size_t{0});
        }
    }
    prompt.text = join_tokens(tokens, prompt.token_indices);
    return prompt;
}

AttentionMaps aggregate_attention(const std::vector<AttentionMaps>& records) {
    if (records.empty()) throw Error(ErrorCode::InvalidArgument, "no attention records to aggregate");
    const AttentionMaps& first = records.front();
    std::vector<double> sum(first.values.size(), 0.0);
    for (const AttentionMaps& rec : records) {
        if (rec.map_h != first.map_h || rec.map_w != first.map_w || rec.tokens.size() != first.tokens.size() ||
            rec.values.size() != first.values.size()) {
            throw Error(ErrorCode::ShapeMismatch, "attention records disagree on shape");
        }
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += rec.values[i];
    }
    AttentionMaps out{first.map_h, first.map_w, first.tokens, std::vector<float>(sum.size())};
    const auto n = static_cast<double>(records.size());
    for (std::size_t i = 0; i < sum.size(); ++i) out.values[i] = static_cast<float>(sum[i] / n);
    return out;
}

std::vector<PatchPrompt> patch_prompts(const AttentionMaps& maps, const PatchLayout& layout,
                                       const PromptMaskOptions& options) {
    const std::vector<BinaryMask2D> raw = binarize(maps);
    // per_token[j][i]: window i of token j
    std::vector<std::vector<BinaryMask2D>> per_token;
    per_token.reserve(raw.size());
    for (const BinaryMask2D& m : raw) {
        const BinaryMask2D opened = open_mask(m, options.se_radius);
        per_token.push_back(mask_patches(upscale_mask(opened, layout.canvas_h, layout.canvas_w), layout));
    }
    std::vector<PatchPrompt> prompts;
    prompts.reserve(layout.count());
    for (std::size_t i = 0; i < layout.count(); ++i) {
        std::vector<BinaryMask2D> window_masks;
        window_masks.reserve(per_token.size());
        for (const auto& token_masks : per_token) window_masks.push_back(token_masks[i]);
        prompts.push_back(select_patch_prompt(i, window_masks, maps.tokens, options.threshold, options.fallback));
    }
    return prompts;
}

void write_pgm(const std::filesystem::path& path, const BinaryMask2D& mask) {
    std::ostringstream os;
    os << "P5\n" << mask.width() << ' ' << mask.height() << "\n255\n";
    std::string bytes = os.str();
    bytes.reserve(bytes.size() + mask.bits().size());
    for (std::uint8_t b : mask.bits()) bytes.push_back(static_cast<char>(b ? 255 : 0));
    write_file_atomic(path, bytes);
}

BinaryMask2D read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::string magic;
    std::size_t width = 0, height = 0, maxval = 0;
    in >> magic >> width >> height >> maxval;
    if (magic != "P5" || !in || maxval != 255) throw Error(ErrorCode::Format, "not a P5/255 PGM: " + path.string());
    in.get();
    std::vector<char> raw(width * height);
    in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
        throw Error(ErrorCode::Format, "truncated payload in " + path.string());
    }
    BinaryMask2D mask(height, width);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        mask.set(i / width, i % width, static_cast<unsigned char>(raw[i]) > 127);
    }
    return mask;
}

}  // namespace accdiff
