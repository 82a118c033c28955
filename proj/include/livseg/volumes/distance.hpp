#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "livseg/volumes/volume.hpp"

namespace livseg::volumes {

/// Signed Euclidean distance (voxel units) to the nearest boundary voxel:
/// negative inside the mask, positive outside, zero on boundary voxels.
/// Stored exactly as signed squared distances.
class SignedDistanceField {
public:
    static constexpr std::int64_t kInfinity = std::numeric_limits<std::int64_t>::max();

    SignedDistanceField() = default;
    SignedDistanceField(Grid grid, std::vector<std::int64_t> signed_squared)
        : grid_(grid), sq_(std::move(signed_squared)) {}

    const Grid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return sq_.size(); }

    /// Signed squared distance; +/-kInfinity when no boundary voxel exists.
    std::int64_t signed_squared(std::size_t i) const { return sq_[i]; }

    double operator[](std::size_t i) const {
        const std::int64_t s = sq_[i];
        if (s == kInfinity) return std::numeric_limits<double>::max();
        if (s == -kInfinity) return -std::numeric_limits<double>::max();
        const double d = std::sqrt(static_cast<double>(s < 0 ? -s : s));
        return s < 0 ? -d : d;
    }
    double at(int x, int y, int z) const { return (*this)[grid_.index(x, y, z)]; }

    /// True when |d| <= limit, compared exactly on squared integers.
    bool within(std::size_t i, double limit) const {
        const std::int64_t s = sq_[i];
        if (s == kInfinity || s == -kInfinity) return false;
        const double a = static_cast<double>(s < 0 ? -s : s);
        return a <= limit * limit;
    }

private:
    Grid grid_;
    std::vector<std::int64_t> sq_;
};

/// Foreground voxel with at least one in-grid background 6-neighbour.
bool is_boundary_voxel(const Mask3D& m, int x, int y, int z);

SignedDistanceField signed_edt(const Mask3D& m);

} // namespace livseg::volumes
