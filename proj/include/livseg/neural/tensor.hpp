#pragma once

#include <cstddef>
#include <vector>

#include "livseg/core/error.hpp"

namespace livseg::neural {

/// Dense row-major tensor of doubles.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s, double fill = 0.0);
    Tensor(std::vector<int> s, std::vector<double> d);

    std::size_t size() const noexcept { return data.size(); }
    int dim(std::size_t i) const { return shape.at(i); }

    friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// (C, H, W) -> (C / r^2, rH, rW) with out[c][h r + i][w r + j] =
/// in[c r^2 + i r + j][h][w]. Throws InvalidArgument unless C % r^2 == 0.
Tensor pixel_shuffle(const Tensor& x, int r = 2);

/// Exact inverse of pixel_shuffle.
Tensor pixel_unshuffle(const Tensor& x, int r = 2);

} // namespace livseg::neural
