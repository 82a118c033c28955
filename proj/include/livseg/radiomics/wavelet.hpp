#pragma once

#include <array>

#include "livseg/volumes/volume.hpp"

namespace livseg::radiomics {

using RealField = volumes::Field<double>;

/// Single-level orthonormal 3D Haar decomposition. Bands are ordered
/// LLL, LLH, ..., HHH with letters for the x, y and z axes; band index is
/// 4*hx + 2*hy + hz. Odd dimensions are padded by repeating the last sample.
/// Band grids have ceil(n/2) samples per axis and doubled spacing.
using HaarBands = std::array<RealField, 8>;

HaarBands haar_analysis(const RealField& input);

/// Inverse of haar_analysis for the padded (even) grid.
RealField haar_synthesis(const HaarBands& bands);

} // namespace livseg::radiomics
