#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "accdiff/error.hpp"

namespace accdiff {

struct Shape3 {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;

    std::size_t size() const noexcept { return height * width * channels; }
    friend bool operator==(const Shape3&, const Shape3&) = default;
};

std::string to_string(const Shape3& shape);

/// Rank-3 latent tensor, height x width x channels, row-major with channels
/// innermost.
class Latent3 {
public:
    Latent3() = default;
    explicit Latent3(Shape3 shape, float fill = 0.0f);
    Latent3(Shape3 shape, std::vector<float> data);

    const Shape3& shape() const noexcept { return shape_; }
    std::size_t height() const noexcept { return shape_.height; }
    std::size_t width() const noexcept { return shape_.width; }
    std::size_t channels() const noexcept { return shape_.channels; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::size_t offset(std::size_t row, std::size_t col, std::size_t ch) const noexcept {
        return (row * shape_.width + col) * shape_.channels + ch;
    }
    float& at(std::size_t row, std::size_t col, std::size_t ch) noexcept {
        return data_[offset(row, col, ch)];
    }
    float at(std::size_t row, std::size_t col, std::size_t ch) const noexcept {
        return data_[offset(row, col, ch)];
    }

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }

    bool all_finite() const noexcept;

    friend bool operator==(const Latent3&, const Latent3&) = default;

private:
    Shape3 shape_;
    std::vector<float> data_;
};

/// Read-only strided window into a Latent3: rows [row0, row0 + rows*row_step)
/// stepping by row_step, likewise for columns. Channels are always contiguous.
class LatentView {
public:
    LatentView(const Latent3& base, std::size_t row0, std::size_t col0, std::size_t rows,
               std::size_t cols, std::size_t row_step = 1, std::size_t col_step = 1);

    Shape3 shape() const noexcept { return {rows_, cols_, base_->channels()}; }
    float at(std::size_t row, std::size_t col, std::size_t ch) const noexcept {
        return base_->at(row0_ + row * row_step_, col0_ + col * col_step_, ch);
    }
    Latent3 materialize() const;

private:
    const Latent3* base_;
    std::size_t row0_, col0_, rows_, cols_, row_step_, col_step_;
};

void require_same_shape(const Latent3& a, const Latent3& b, std::string_view what);

double max_abs_diff(const Latent3& a, const Latent3& b);

}  // namespace accdiff
