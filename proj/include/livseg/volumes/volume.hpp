#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "livseg/core/error.hpp"

namespace livseg::volumes {

struct Index3 {
    int x = 0;
    int y = 0;
    int z = 0;
    friend bool operator==(const Index3&, const Index3&) = default;
};

struct Dims {
    int nx = 0;
    int ny = 0;
    int nz = 0;

    std::size_t count() const noexcept {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
    }
    friend bool operator==(const Dims&, const Dims&) = default;
};

/// Physical voxel size in millimetres.
struct Spacing {
    double sx = 1.0;
    double sy = 1.0;
    double sz = 1.0;
    friend bool operator==(const Spacing&, const Spacing&) = default;
};

/// Voxel lattice shared by every field type; x varies fastest in memory.
struct Grid {
    Dims dims;
    Spacing spacing;

    std::size_t size() const noexcept { return dims.count(); }

    std::size_t index(int x, int y, int z) const noexcept {
        return (static_cast<std::size_t>(z) * static_cast<std::size_t>(dims.ny) + static_cast<std::size_t>(y)) *
                   static_cast<std::size_t>(dims.nx) +
               static_cast<std::size_t>(x);
    }
    std::size_t index(Index3 p) const noexcept { return index(p.x, p.y, p.z); }

    Index3 coords(std::size_t i) const noexcept {
        const auto nx = static_cast<std::size_t>(dims.nx);
        const auto ny = static_cast<std::size_t>(dims.ny);
        return {static_cast<int>(i % nx), static_cast<int>((i / nx) % ny), static_cast<int>(i / (nx * ny))};
    }

    bool contains(int x, int y, int z) const noexcept {
        return x >= 0 && y >= 0 && z >= 0 && x < dims.nx && y < dims.ny && z < dims.nz;
    }

    double voxel_volume() const noexcept { return spacing.sx * spacing.sy * spacing.sz; }

    /// Throws InvalidArgument unless dims and spacing are strictly positive.
    void validate() const;

    friend bool operator==(const Grid&, const Grid&) = default;
};

/// Throws GridMismatchError when the two grids differ in dims or spacing.
void require_same_grid(const Grid& a, const Grid& b, const std::string& what);

/// Axis-aligned inclusive voxel box.
struct BoundingBox {
    Index3 lo;
    Index3 hi;

    Dims extent() const noexcept { return {hi.x - lo.x + 1, hi.y - lo.y + 1, hi.z - lo.z + 1}; }
    bool contains(int x, int y, int z) const noexcept {
        return x >= lo.x && x <= hi.x && y >= lo.y && y <= hi.y && z >= lo.z && z <= hi.z;
    }
    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Common storage for a scalar field on a grid.
template <class T>
class Field {
public:
    using value_type = T;

    Field() = default;
    Field(Grid grid, std::vector<T> data) : grid_(grid), data_(std::move(data)) {
        grid_.validate();
        if (data_.size() != grid_.size())
            throw InvalidArgument("field data length " + std::to_string(data_.size()) + " does not match grid " +
                                  std::to_string(grid_.size()));
    }

    const Grid& grid() const noexcept { return grid_; }
    const Dims& dims() const noexcept { return grid_.dims; }
    const Spacing& spacing() const noexcept { return grid_.spacing; }
    std::size_t size() const noexcept { return data_.size(); }

    T operator[](std::size_t i) const { return data_[i]; }
    T at(int x, int y, int z) const { return data_[grid_.index(x, y, z)]; }

    std::span<const T> data() const noexcept { return data_; }

    friend bool operator==(const Field&, const Field&) = default;

protected:
    Grid grid_;
    std::vector<T> data_;
};

enum class ValueKind : std::uint8_t { HuFloat, Normalized8 };

/// CT intensities, either raw Hounsfield units or 8-bit normalized levels.
class Volume3D : public Field<float> {
public:
    Volume3D() = default;
    Volume3D(Grid grid, ValueKind kind, std::vector<float> data);

    ValueKind kind() const noexcept { return kind_; }

    friend bool operator==(const Volume3D&, const Volume3D&) = default;

private:
    ValueKind kind_ = ValueKind::HuFloat;
};

/// Binary labels; every voxel is exactly 0 or 1.
class Mask3D : public Field<std::uint8_t> {
public:
    Mask3D() = default;
    explicit Mask3D(Grid grid);
    Mask3D(Grid grid, std::vector<std::uint8_t> data);

    bool test(std::size_t i) const { return data_[i] != 0; }
    bool test(int x, int y, int z) const { return data_[grid_.index(x, y, z)] != 0; }
    void set(std::size_t i, bool v) { data_[i] = v ? 1 : 0; }
    void set(int x, int y, int z, bool v) { data_[grid_.index(x, y, z)] = v ? 1 : 0; }

    std::size_t count() const noexcept;
    bool empty() const noexcept { return count() == 0; }

    friend bool operator==(const Mask3D&, const Mask3D&) = default;
};

/// Soft per-voxel probabilities in [0, 1].
class ProbMap3D : public Field<float> {
public:
    ProbMap3D() = default;
    ProbMap3D(Grid grid, std::vector<float> data);

    friend bool operator==(const ProbMap3D&, const ProbMap3D&) = default;
};

} // namespace livseg::volumes
