#pragma once

#include <optional>
#include <vector>

#include "livseg/volumes/volume.hpp"

namespace livseg::volumes {

inline constexpr double kHuWindowLow = -100.0;
inline constexpr double kHuWindowHigh = 400.0;

/// Clamps HU to [-100, 400] and maps linearly onto integer levels 0..255.
Volume3D clip_rescale_hu(const Volume3D& v);

/// Scalar form of the window mapping, exposed for property tests.
float rescale_hu_value(double hu) noexcept;

/// Multiplies an HU volume so the median over `region` equals `reference_hu`.
/// Returns the input unchanged when the region is empty or its median is
/// below 1 HU.
Volume3D standardize_intensity(const Volume3D& hu, const Mask3D& region, double reference_hu);

/// Normalized 1-D Gaussian taps with radius ceil(3 sigma); {1} for sigma <= 0.
std::vector<double> gaussian_kernel(double sigma);

/// In-place separable Gaussian filter over a grid-shaped buffer, clamped borders.
void gaussian_filter(const Grid& g, std::vector<double>& values, double sigma_voxels);

/// Gaussian smoothing of an HU volume (sigma in voxels). Normalized inputs are
/// rounded back to integer levels.
Volume3D gaussian_smooth(const Volume3D& v, double sigma_voxels);

/// Trilinear resampling onto the requested spacing. Output voxel i sits at
/// physical offset i * target from the first input voxel center; samples
/// beyond the last input voxel are clamped to it.
Volume3D resample(const Volume3D& v, const Spacing& target);
Volume3D resample_isotropic(const Volume3D& v, double target_mm);

/// Copies a box out of the volume; voxels outside the source take `fill`.
Volume3D crop(const Volume3D& v, const BoundingBox& box, float fill = 0.0f);
Mask3D crop(const Mask3D& m, const BoundingBox& box);
ProbMap3D crop(const ProbMap3D& p, const BoundingBox& box);

/// Axial slices [z-1, z, z+1] (edges replicated), optionally followed by
/// the liver prior at slice z as a fourth channel.
struct SliceStack {
    int nx = 0;
    int ny = 0;
    int center_index = 0;
    std::vector<std::vector<float>> channels;

    std::size_t channel_count() const noexcept { return channels.size(); }
};

SliceStack extract_slice_stack(const Volume3D& v, int z, const ProbMap3D* liver_prior = nullptr);

} // namespace livseg::volumes
