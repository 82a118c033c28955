#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "livseg/radiomics/manifest.hpp"
#include "livseg/radiomics/region.hpp"
#include "livseg/volumes/volume.hpp"

namespace livseg::radiomics {

using volumes::Index3;
using volumes::Spacing;

/// How intensities map to discrete levels for histograms and texture
/// matrices. Fixed: level = floor(v / width) on 8-bit data. MinMax: the
/// region's [min, max] split into equal-width levels (all level 0 when
/// the region is constant).
enum class Quantization : std::uint8_t { Fixed, MinMax };

/// Real-valued field restricted to a region of interest. This is the common
/// input of every feature group; volumes, bands and wavelet sub-bands are
/// all converted to it.
struct RegionField {
    volumes::Grid grid;
    std::vector<double> values;
    std::vector<std::uint8_t> inside;
    std::vector<std::size_t> roi; // ascending linear indices with inside == 1
    Quantization quantization = Quantization::MinMax;

    double value(int x, int y, int z) const { return values[grid.index(x, y, z)]; }
    bool in_roi(int x, int y, int z) const {
        return grid.contains(x, y, z) && inside[grid.index(x, y, z)] != 0;
    }
    std::vector<double> roi_values() const;
};

/// Crop of `volume` around `region` padded by `margin` voxels (clipped to the
/// volume), with the region as ROI. Normalized8 volumes use fixed bins.
RegionField make_region_field(const CandidateRegion& region, const Volume3D& volume, int margin);

/// Levels in [0, levels) for every voxel of the field; non-ROI voxels get -1.
std::vector<int> quantize(const RegionField& f, int levels);

/// The 13 direction vectors with one representative per +/- pair.
const std::array<Index3, 13>& unique_directions();

using FirstOrder = std::array<double, kFirstOrderCount>;
using GradientStats = std::array<double, kGradientCount>;
using RunLength = std::array<double, kRunLengthCount>;
using Glcm = std::array<double, kGlcmCount>;
using Shape = std::array<double, kShapeCount>;
using Moments = std::array<double, kMomentCount>;

FirstOrder first_order_features(std::span<const double> values, Quantization q, double voxel_volume);
FirstOrder first_order_features(const RegionField& f);

/// Mean and std of the gradient magnitude after Gaussian smoothing with a
/// standard deviation of `sigma_voxels` grid steps per axis.
GradientStats gradient_features(const RegionField& f, double sigma_voxels = 1.5);

/// Run-length features on 128 levels, with the run matrices summed over
/// `directions` (default: all 13).
RunLength rlm_features(const RegionField& f, std::span<const Index3> directions = {});

/// Symmetric distance-1 co-occurrence features on 128 levels, summed over
/// `directions` (default: all 13).
Glcm glcm_features(const RegionField& f, std::span<const Index3> directions = {});

Shape shape_features(const RegionField& f);

/// Trace, principal-minor sum and determinant of the intensity-weighted
/// central second-moment matrix (coordinates in mm, weights |v|).
Moments moment_invariants(const RegionField& f);

// Convenience overloads on a region of a volume.
FirstOrder first_order_features(const CandidateRegion& region, const Volume3D& volume);
GradientStats gradient_features(const CandidateRegion& region, const Volume3D& volume, double sigma_voxels = 1.5);
RunLength rlm_features(const CandidateRegion& region, const Volume3D& volume);
Glcm glcm_features(const CandidateRegion& region, const Volume3D& volume);
Shape shape_features(const CandidateRegion& region);
Moments moment_invariants(const CandidateRegion& region, const Volume3D& volume);

struct FeatureVector {
    int region_id = 0;
    std::vector<double> values;
};

/// Full vector in manifest order. Throws InvalidArgument when the manifest
/// is not the standard one or the region does not lie on the volume grid.
FeatureVector extract_features(const CandidateRegion& region, const Volume3D& volume,
                               const FeatureManifest& manifest = FeatureManifest::standard());

/// Features of many regions; rows follow the input order.
std::vector<FeatureVector> extract_all(std::span<const CandidateRegion> regions, const Volume3D& volume,
                                       int workers = 1);

/// CSV with header "region_id,<manifest names>" and shortest round-trip numbers.
std::string features_to_csv(const FeatureManifest& manifest, std::span<const FeatureVector> rows);
/// Parses CSV written by features_to_csv; the header must match the manifest.
std::vector<FeatureVector> features_from_csv(const FeatureManifest& manifest, std::string_view text);

} // namespace livseg::radiomics
