#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace accdiff {

/// Philox4x32-10 block function (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

enum class Branch : std::uint32_t {
    Init = 1,
    Inversion = 2,
    Shuffle = 3,
    Test = 255,
};

/// Identifies an independent random stream. Streams with different keys never
/// share Philox counters, so results do not depend on evaluation order.
struct StreamKey {
    std::uint64_t seed = 0;
    std::uint32_t stage = 0;
    std::uint32_t step = 0;
    Branch branch = Branch::Test;
    std::uint32_t index = 0;
};

/// Sequential draws from a single keyed stream. Cheap to construct; create one
/// per independent unit of work.
class CounterRng {
public:
    explicit CounterRng(const StreamKey& key) noexcept;

    std::uint32_t next_u32() noexcept;
    /// Uniform in [0, 1) with 53 random bits.
    double next_unit() noexcept;
    /// Uniform integer in [0, bound), unbiased (rejection on the low range).
    std::uint32_t next_below(std::uint32_t bound) noexcept;
    double next_normal() noexcept;

private:
    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 4> block_{};
    int used_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

void fill_normal(const StreamKey& key, std::span<float> out) noexcept;

}  // namespace accdiff
