#include "accdiff/dilated.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "accdiff/rng.hpp"

namespace accdiff {

std::string_view to_string(PermutationFamily family) noexcept {
    switch (family) {
        case PermutationFamily::Uniform: return "uniform";
        case PermutationFamily::Cyclic: return "cyclic";
        case PermutationFamily::Identity: return "identity";
    }
    return "uniform";
}

PermutationFamily parse_permutation_family(std::string_view name) {
    if (name == "uniform") return PermutationFamily::Uniform;
    if (name == "cyclic") return PermutationFamily::Cyclic;
    if (name == "identity" || name == "none") return PermutationFamily::Identity;
    throw Error(ErrorCode::InvalidArgument, "unknown permutation family '" + std::string(name) + "'");
}

ShuffleMap::ShuffleMap(std::uint64_t seed, int step, PermutationFamily family, std::size_t sample_count,
                       Shape3 sample_shape)
    : seed_(seed), step_(step), family_(family), sample_count_(sample_count), sample_shape_(sample_shape) {}

std::vector<std::uint32_t> ShuffleMap::permutation(std::size_t row, std::size_t col) const {
    std::vector<std::uint32_t> perm(sample_count_);
    std::iota(perm.begin(), perm.end(), 0u);
    if (sample_count_ <= 1 || family_ == PermutationFamily::Identity) return perm;

    const auto position = static_cast<std::uint32_t>(row * sample_shape_.width + col);
    CounterRng rng({seed_, 0, static_cast<std::uint32_t>(step_), Branch::Shuffle, position});
    const auto n = static_cast<std::uint32_t>(sample_count_);
    if (family_ == PermutationFamily::Cyclic) {
        const std::uint32_t shift = rng.next_below(n);
        for (std::uint32_t k = 0; k < n; ++k) perm[k] = (k + shift) % n;
        return perm;
    }
    for (std::uint32_t i = n - 1; i > 0; --i) {
        std::swap(perm[i], perm[rng.next_below(i + 1)]);
    }
    return perm;
}

DilatedSet dilated_split(const Latent3& canvas, std::size_t stride_h, std::size_t stride_w) {
    if (stride_h == 0 || stride_w == 0) {
        throw Error(ErrorCode::InvalidArgument, "dilation strides must be positive");
    }
    if (canvas.height() % stride_h != 0 || canvas.width() % stride_w != 0) {
        throw Error(ErrorCode::Divisibility, "canvas " + to_string(canvas.shape()) +
                                                 " not divisible by dilation " + std::to_string(stride_h) +
                                                 "x" + std::to_string(stride_w));
    }
    DilatedSet set{stride_h, stride_w, {}};
    set.samples.reserve(stride_h * stride_w);
    const std::size_t h = canvas.height() / stride_h;
    const std::size_t w = canvas.width() / stride_w;
    for (std::size_t i = 0; i < stride_h; ++i) {
        for (std::size_t j = 0; j < stride_w; ++j) {
            set.samples.push_back(LatentView(canvas, i, j, h, w, stride_h, stride_w).materialize());
        }
    }
    return set;
}

namespace {

Shape3 check_set(const DilatedSet& set) {
    if (set.stride_h == 0 || set.stride_w == 0 || set.samples.size() != set.stride_h * set.stride_w) {
        throw Error(ErrorCode::ShapeMismatch, "dilated set has " + std::to_string(set.samples.size()) +
                                                  " samples for strides " + std::to_string(set.stride_h) + "x" +
                                                  std::to_string(set.stride_w));
    }
    const Shape3 shape = set.samples.front().shape();
    for (const Latent3& s : set.samples) {
        if (s.shape() != shape) {
            throw Error(ErrorCode::ShapeMismatch, "inconsistent dilated sample shapes " + to_string(shape) +
                                                      " vs " + to_string(s.shape()));
        }
    }
    return shape;
}

}  // namespace

Latent3 dilated_merge(const DilatedSet& set) {
    const Shape3 s = check_set(set);
    Latent3 out({s.height * set.stride_h, s.width * set.stride_w, s.channels});
    for (std::size_t i = 0; i < set.stride_h; ++i) {
        for (std::size_t j = 0; j < set.stride_w; ++j) {
            const Latent3& sample = set.samples[i * set.stride_w + j];
            for (std::size_t r = 0; r < s.height; ++r) {
                for (std::size_t c = 0; c < s.width; ++c) {
                    for (std::size_t ch = 0; ch < s.channels; ++ch) {
                        out.at(r * set.stride_h + i, c * set.stride_w + j, ch) = sample.at(r, c, ch);
                    }
                }
            }
        }
    }
    return out;
}

namespace {

// inverse = false: dst[k] = src[perm[k]]; inverse = true: dst[perm[k]] = src[k].
DilatedSet permute_positions(const DilatedSet& set, const ShuffleMap& map, bool inverse) {
    const Shape3 s = check_set(set);
    if (map.sample_count() != set.count() || map.sample_shape() != s) {
        throw Error(ErrorCode::ShapeMismatch, "shuffle map does not match dilated set");
    }
    DilatedSet out = set;
    if (set.count() == 1 || map.family() == PermutationFamily::Identity) return out;
    for (std::size_t r = 0; r < s.height; ++r) {
        for (std::size_t c = 0; c < s.width; ++c) {
            const auto perm = map.permutation(r, c);
            for (std::size_t k = 0; k < perm.size(); ++k) {
                const Latent3& src = set.samples[inverse ? k : perm[k]];
                Latent3& dst = out.samples[inverse ? perm[k] : k];
                for (std::size_t ch = 0; ch < s.channels; ++ch) dst.at(r, c, ch) = src.at(r, c, ch);
            }
        }
    }
    return out;
}

}  // namespace

ShuffleResult window_shuffle(const DilatedSet& set, int step, std::uint64_t seed, PermutationFamily family) {
    const Shape3 s = check_set(set);
    ShuffleMap map(seed, step, family, set.count(), s);
    DilatedSet shuffled = permute_positions(set, map, false);
    return {std::move(shuffled), std::move(map)};
}

DilatedSet window_unshuffle(const DilatedSet& set, const ShuffleMap& map) {
    return permute_positions(set, map, true);
}

Latent3 blend(const Latent3& patch_branch, const Latent3& global_branch, double eta) {
    require_same_shape(patch_branch, global_branch, "blend");
    if (!(eta >= 0.0 && eta <= 1.0)) {
        throw Error(ErrorCode::OutOfRange, "blend weight " + std::to_string(eta) + " outside [0, 1]");
    }
    if (eta == 0.0) return patch_branch;
    if (eta == 1.0) return global_branch;
    Latent3 out(patch_branch.shape());
    auto dst = out.data();
    auto z = patch_branch.data();
    auto g = global_branch.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] = static_cast<float>((1.0 - eta) * z[i] + eta * g[i]);
    }
    return out;
}

}  // namespace accdiff
