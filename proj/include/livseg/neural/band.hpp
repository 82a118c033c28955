#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "livseg/neural/cnn.hpp"
#include "livseg/neural/train.hpp"
#include "livseg/volumes/volume.hpp"

namespace livseg::neural {

inline constexpr double kDefaultBandWidth = 6.0;

struct BandVoxel {
    std::size_t index = 0;
    std::int64_t signed_squared = 0;  // exact squared distance, negative inside
    int label = 0;                    // 1 inside or on the boundary, 0 outside
};

/// Voxels with |d| <= d_max around the mask boundary, in index order.
/// Boundary voxels (d = 0) are positives. Throws on an empty mask.
std::vector<BandVoxel> make_band_dataset(const volumes::Volume3D& volume, const volumes::Mask3D& mask,
                                         double d_max = kDefaultBandWidth);

/// s^3 patch centred on a voxel, coordinates clamped at the borders, with
/// 8-bit intensities mapped to (v - 127.5) / 127.5. Order: z, y, x.
std::vector<double> extract_patch(const volumes::Volume3D& volume, std::size_t index, int patch_size);

PatchSet make_patch_set(const volumes::Volume3D& volume, const std::vector<BandVoxel>& voxels, int patch_size);

/// Probability of tumor for each listed voxel index.
using VoxelClassifier = std::function<std::vector<double>(const std::vector<std::size_t>&)>;

/// Wraps a CNN as a voxel classifier over the given volume.
VoxelClassifier cnn_classifier(const Cnn3dModel& model, const volumes::Volume3D& volume, int workers = 1);

/// Voxels in the band get label (classifier output >= 0.5); all other
/// voxels keep their value.
volumes::Mask3D refine_labels(const volumes::Mask3D& mask, const VoxelClassifier& classifier,
                              double d_max = kDefaultBandWidth);

/// Throws InvalidArgument when patch_size differs from the model's.
volumes::Mask3D refine_labels(const volumes::Mask3D& mask, const volumes::Volume3D& volume, const Cnn3dModel& model,
                              int patch_size, double d_max = kDefaultBandWidth, int workers = 1);

} // namespace livseg::neural
