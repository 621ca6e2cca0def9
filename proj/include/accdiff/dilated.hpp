#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "accdiff/latent.hpp"

namespace accdiff {

/// Strided decomposition of a canvas into h_s * w_s interleaved samples.
/// samples[k] (0-based k = i * w_s + j) holds canvas cells (i::h_s, j::w_s).
struct DilatedSet {
    std::size_t stride_h = 1;
    std::size_t stride_w = 1;
    std::vector<Latent3> samples;

    std::size_t count() const noexcept { return samples.size(); }
};

enum class PermutationFamily {
    Uniform,   // uniformly random permutation per position
    Cyclic,    // random rotation per position
    Identity,  // no interaction
};

std::string_view to_string(PermutationFamily family) noexcept;
PermutationFamily parse_permutation_family(std::string_view name);

/// Implicit store of the per-position bijections used by window_shuffle.
/// Permutations are re-derived from (seed, step, row, col) on demand.
class ShuffleMap {
public:
    ShuffleMap(std::uint64_t seed, int step, PermutationFamily family, std::size_t sample_count,
               Shape3 sample_shape);

    /// perm[k] = source sample index for destination k at the given position.
    std::vector<std::uint32_t> permutation(std::size_t row, std::size_t col) const;

    std::uint64_t seed() const noexcept { return seed_; }
    int step() const noexcept { return step_; }
    PermutationFamily family() const noexcept { return family_; }
    std::size_t sample_count() const noexcept { return sample_count_; }
    const Shape3& sample_shape() const noexcept { return sample_shape_; }

private:
    std::uint64_t seed_;
    int step_;
    PermutationFamily family_;
    std::size_t sample_count_;
    Shape3 sample_shape_;
};

DilatedSet dilated_split(const Latent3& canvas, std::size_t stride_h, std::size_t stride_w);
Latent3 dilated_merge(const DilatedSet& set);

struct ShuffleResult {
    DilatedSet set;
    ShuffleMap map;
};

/// out.samples[k] at (r, c) = in.samples[f(k)] at (r, c), f drawn per position.
ShuffleResult window_shuffle(const DilatedSet& set, int step, std::uint64_t seed,
                             PermutationFamily family = PermutationFamily::Uniform);
/// out.samples[k] at (r, c) = in.samples[f^-1(k)] at (r, c).
DilatedSet window_unshuffle(const DilatedSet& set, const ShuffleMap& map);

/// (1 - eta) * patch_branch + eta * global_branch.
Latent3 blend(const Latent3& patch_branch, const Latent3& global_branch, double eta);

}  // namespace accdiff
