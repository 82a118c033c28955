#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "livseg/volumes/volume.hpp"

namespace livseg::radiomics {

using volumes::BoundingBox;
using volumes::Grid;
using volumes::Mask3D;
using volumes::Volume3D;

enum class RegionSource : std::uint8_t { LesionComponent, SampledNegative, Candidate };
enum class RegionLabel : std::uint8_t { Negative = 0, Positive = 1, Unknown = 2 };

/// A set of voxels on a volume grid, stored as ascending linear indices.
struct CandidateRegion {
    int id = 0;
    Grid grid;
    std::vector<std::size_t> voxels;
    BoundingBox bbox;
    RegionSource source = RegionSource::Candidate;
    RegionLabel label = RegionLabel::Unknown;

    std::size_t size() const noexcept { return voxels.size(); }
    Mask3D to_mask() const;
};

/// Builds a region from arbitrary in-grid indices (deduplicated, sorted).
/// Throws InvalidArgument when the set is empty or out of range.
CandidateRegion make_region(const Grid& grid, std::vector<std::size_t> voxels, RegionSource source,
                            RegionLabel label, int id = 0);

/// One region per 26-connected component, in raster order of first voxel.
std::vector<CandidateRegion> extract_positive_regions(const Mask3D& tumor_gt);

/// Same decomposition for a predicted mask; labels are Unknown.
std::vector<CandidateRegion> extract_candidate_regions(const Mask3D& predicted);

struct BandResult {
    CandidateRegion band;
    bool fell_back = false; // band was empty and the whole region was used
};

/// Voxels whose signed distance to the region boundary lies in [-width, width].
BandResult boundary_band(const CandidateRegion& region, double width = 2.0);

} // namespace livseg::radiomics
