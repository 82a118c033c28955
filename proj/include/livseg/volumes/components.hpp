#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "livseg/volumes/volume.hpp"

namespace livseg::volumes {

enum class Connectivity { Six, TwentySix, InPlaneEight };

struct Component {
    int label = 0;
    std::size_t size = 0;
    BoundingBox bbox;
    std::vector<std::size_t> voxels; // linear indices, ascending
};

/// Labels 1..K, numbered in raster order of each component's first voxel;
/// 0 is background.
struct Labeling {
    Grid grid;
    std::vector<std::int32_t> labels;
    std::vector<Component> components;
};

Labeling connected_components(const Mask3D& m, Connectivity connectivity);

/// Neighbour offsets for a connectivity (excluding the centre voxel).
std::vector<Index3> neighbour_offsets(Connectivity connectivity);

} // namespace livseg::volumes
