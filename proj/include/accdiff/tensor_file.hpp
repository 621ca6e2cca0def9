#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <variant>
#include <vector>

#include "accdiff/latent.hpp"

namespace accdiff {

// On-disk layout, all fields little-endian:
//   "ACCT" | u32 version | u32 dtype | u32 ndim | u64 dims[ndim] | payload
// Payload is row-major; dtype 0 = float32, 1 = uint8.
inline constexpr std::uint32_t kTensorFileVersion = 1;

enum class DType : std::uint32_t { Float32 = 0, UInt8 = 1 };

std::size_t dtype_size(DType dtype) noexcept;
std::string_view to_string(DType dtype) noexcept;

struct TensorFile {
    DType dtype = DType::Float32;
    std::vector<std::uint64_t> dims;
    std::vector<float> f32;
    std::vector<std::uint8_t> u8;

    std::uint64_t element_count() const noexcept;
    friend bool operator==(const TensorFile&, const TensorFile&) = default;
};

std::string encode_tensor(const TensorFile& tensor);
TensorFile decode_tensor(std::string_view bytes);

void write_tensor(const std::filesystem::path& path, const TensorFile& tensor);
TensorFile read_tensor(const std::filesystem::path& path);

TensorFile to_tensor(const Latent3& latent);
/// Requires a rank-3 float32 tensor.
Latent3 to_latent(const TensorFile& tensor);
/// Stacks same-shaped latents into a rank-4 tensor [count, H, W, C].
TensorFile stack_latents(const std::vector<Latent3>& series);

/// Writes to a sibling temp file then renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace accdiff
