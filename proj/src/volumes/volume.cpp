#include "livseg/volumes/volume.hpp"

#include <algorithm>
#include <cmath>

namespace livseg::volumes {

void Grid::validate() const {
    if (dims.nx <= 0 || dims.ny <= 0 || dims.nz <= 0)
        throw InvalidArgument("grid dims must be positive, got " + std::to_string(dims.nx) + "x" +
                              std::to_string(dims.ny) + "x" + std::to_string(dims.nz));
    if (!(spacing.sx > 0.0) || !(spacing.sy > 0.0) || !(spacing.sz > 0.0))
        throw InvalidArgument("grid spacing must be strictly positive");
}

void require_same_grid(const Grid& a, const Grid& b, const std::string& what) {
    if (a.dims != b.dims)
        throw GridMismatchError(what + ": dims " + std::to_string(a.dims.nx) + "x" + std::to_string(a.dims.ny) +
                                "x" + std::to_string(a.dims.nz) + " vs " + std::to_string(b.dims.nx) + "x" +
                                std::to_string(b.dims.ny) + "x" + std::to_string(b.dims.nz));
    if (a.spacing != b.spacing) throw GridMismatchError(what + ": spacing differs");
}

Volume3D::Volume3D(Grid grid, ValueKind kind, std::vector<float> data)
    : Field<float>(grid, std::move(data)), kind_(kind) {
    if (kind_ == ValueKind::Normalized8) {
        for (float v : data_) {
            if (!(v >= 0.0f && v <= 255.0f) || v != std::nearbyint(v))
                throw InvalidArgument("normalized-8bit volume holds a value outside the integer range 0..255");
        }
    } else {
        for (float v : data_)
            if (!std::isfinite(v)) throw InvalidArgument("volume holds a non-finite value");
    }
}

Mask3D::Mask3D(Grid grid) : Field<std::uint8_t>(grid, std::vector<std::uint8_t>(grid.size(), 0)) {}

Mask3D::Mask3D(Grid grid, std::vector<std::uint8_t> data) : Field<std::uint8_t>(grid, std::move(data)) {
    for (auto v : data_)
        if (v > 1) throw InvalidArgument("mask values must be 0 or 1");
}

std::size_t Mask3D::count() const noexcept {
    return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

ProbMap3D::ProbMap3D(Grid grid, std::vector<float> data) : Field<float>(grid, std::move(data)) {
    for (float v : data_)
        if (!(v >= 0.0f && v <= 1.0f)) throw InvalidArgument("probability outside [0, 1]");
}

} // namespace livseg::volumes
