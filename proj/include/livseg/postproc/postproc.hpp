#pragma once

#include <array>

#include "livseg/core/error.hpp"
#include "livseg/volumes/volume.hpp"

namespace livseg::postproc {

using volumes::Mask3D;
using volumes::ProbMap3D;

/// Thrown when a histogram has mass in fewer than two levels.
class DegenerateHistogramError : public Error {
public:
    using Error::Error;
};

struct Histogram256 {
    std::array<double, 256> counts{};
    bool normalized = false;

    double total() const noexcept;
    /// Copy scaled so the counts sum to one.
    Histogram256 normalize() const;
};

struct OtsuResult {
    int tau_star = 0;
    double omega0 = 0.0;
    double omega1 = 0.0;
    double mu0 = 0.0;
    double mu1 = 0.0;
    double variance = 0.0;
};

/// Threshold in [0, 254] maximising w0*w1*(mu0 - mu1)^2, where class 0 is
/// levels <= tau. Ties go to the smallest tau; empty classes score zero.
OtsuResult otsu_threshold(const Histogram256& h);

/// Probability scaled to the nearest 8-bit level.
inline int probability_level(float p) noexcept { return static_cast<int>(p * 255.0 + 0.5); }

Histogram256 level_histogram(const ProbMap3D& p);

enum class ThresholdMode { OtsuPerVolume, Fixed };

struct BinarizeResult {
    Mask3D mask;
    int threshold = 0; // voxels with level > threshold are foreground
};

/// Foreground iff round(255 p) > tau, with tau from Otsu or given.
BinarizeResult binarize(const ProbMap3D& p, ThresholdMode mode, int fixed_tau = 127);

/// Per axial slice: erosion by the 3x3 square (out-of-grid counts as
/// background) followed by dilation with the same element.
Mask3D morph_smooth(const Mask3D& m);

inline constexpr double kRestoreThreshold = 0.6;

/// Three-slice consistency rule. A background voxel whose z-1 and z+1
/// neighbours are foreground is restored when the mean of their soft
/// probabilities exceeds 0.6. With suppress_isolated, foreground voxels whose
/// two z-neighbours are both background are cleared. Slices 0 and nz-1 are
/// copied unchanged. Reads only the input mask.
Mask3D temporal_refine(const Mask3D& y, const ProbMap3D& p, bool suppress_isolated = false);

} // namespace livseg::postproc
