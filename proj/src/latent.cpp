#include "accdiff/latent.hpp"

#include <algorithm>
#include <cmath>

namespace accdiff {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid-argument";
        case ErrorCode::OutOfRange: return "out-of-range";
        case ErrorCode::ShapeMismatch: return "shape-mismatch";
        case ErrorCode::Divisibility: return "divisibility";
        case ErrorCode::WindowExceedsCanvas: return "window-exceeds-canvas";
        case ErrorCode::Contract: return "contract";
        case ErrorCode::Config: return "config";
        case ErrorCode::Io: return "io";
        case ErrorCode::Format: return "format";
    }
    return "unknown";
}

std::string to_string(const Shape3& shape) {
    return std::to_string(shape.height) + "x" + std::to_string(shape.width) + "x" +
           std::to_string(shape.channels);
}

Latent3::Latent3(Shape3 shape, float fill) : shape_(shape), data_(shape.size(), fill) {}

Latent3::Latent3(Shape3 shape, std::vector<float> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size()) {
        throw Error(ErrorCode::ShapeMismatch, "latent data length " + std::to_string(data_.size()) +
                                                  " does not match shape " + to_string(shape_));
    }
}

bool Latent3::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

LatentView::LatentView(const Latent3& base, std::size_t row0, std::size_t col0, std::size_t rows,
                       std::size_t cols, std::size_t row_step, std::size_t col_step)
    : base_(&base), row0_(row0), col0_(col0), rows_(rows), cols_(cols), row_step_(row_step),
      col_step_(col_step) {
    if (rows == 0 || cols == 0 || row_step == 0 || col_step == 0 ||
        row0 + (rows - 1) * row_step >= base.height() ||
        col0 + (cols - 1) * col_step >= base.width()) {
        throw Error(ErrorCode::OutOfRange, "view exceeds latent bounds " + to_string(base.shape()));
    }
}

Latent3 LatentView::materialize() const {
    Latent3 out(shape());
    const std::size_t c = base_->channels();
    auto dst = out.data().begin();
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t q = 0; q < cols_; ++q) {
            auto src = base_->data().begin() +
                       static_cast<std::ptrdiff_t>(base_->offset(row0_ + r * row_step_, col0_ + q * col_step_, 0));
            dst = std::copy(src, src + static_cast<std::ptrdiff_t>(c), dst);
        }
    }
    return out;
}

void require_same_shape(const Latent3& a, const Latent3& b, std::string_view what) {
    if (a.shape() != b.shape()) {
        throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": shape " + to_string(a.shape()) +
                                                  " vs " + to_string(b.shape()));
    }
}

double max_abs_diff(const Latent3& a, const Latent3& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(static_cast<double>(a.data()[i]) - b.data()[i]));
    }
    return m;
}

}  // namespace accdiff
