#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "livseg/volumes/volume.hpp"

namespace livseg::phantom {

/// Point in millimetres, measured from the centre of voxel (0, 0, 0).
struct Point {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    friend bool operator==(const Point&, const Point&) = default;
};

struct LiverShape {
    Point center;
    Point radii;  // ellipsoid semi-axes, mm
    double hu = 60.0;
    friend bool operator==(const LiverShape&, const LiverShape&) = default;
};

struct Lesion {
    Point center;
    double radius_mm = 5.0;
    double hu = 40.0;
    friend bool operator==(const Lesion&, const Lesion&) = default;
};

/// Bright straight tube inside the liver that bleeds into the tumor map.
struct Vessel {
    Point a;
    Point b;
    double radius_mm = 2.0;
    double hu = 150.0;
    friend bool operator==(const Vessel&, const Vessel&) = default;
};

/// How the synthetic tumor probability map departs from ground truth.
struct Degradation {
    double blur_sigma_vox = 0.0;      // Gaussian blur of the (shifted) masks
    double boundary_shift_mm = 0.0;   // per-lesion radius error drawn from [-s, s]
    double speckle_rate = 0.0;        // per-voxel chance of an isolated bright voxel
    double vessel_leak = 0.0;         // peak tumor probability along vessels
    double slice_dropout = 0.0;       // per-lesion chance of one faded axial slice
    double dropout_factor = 0.25;     // probability multiplier on a faded slice
    friend bool operator==(const Degradation&, const Degradation&) = default;
};

struct PhantomSpec {
    volumes::Grid grid{{80, 80, 56}, {1.0, 1.0, 1.0}};
    double background_hu = 20.0;
    LiverShape liver;
    std::vector<Lesion> lesions;
    std::vector<Vessel> vessels;
    double noise_sigma_hu = 0.0;
    Degradation degradation;
    std::uint64_t seed = 0;

    /// Throws InvalidArgument on bad geometry, including a lesion that
    /// does not fit inside the liver.
    void validate() const;

    std::string to_json() const;
    static PhantomSpec from_json(const std::string& text);

    friend bool operator==(const PhantomSpec&, const PhantomSpec&) = default;
};

struct Phantom {
    volumes::Volume3D ct;  // HU
    volumes::Mask3D liver;
    volumes::Mask3D tumor;
    volumes::Mask3D vessels;
    volumes::ProbMap3D p_liver;
    volumes::ProbMap3D p_tumor;
};

Phantom generate_phantom(const PhantomSpec& spec);

/// scale * v + N(0, sigma^2) per voxel. Requires an HU volume,
/// 0 <= sigma <= 10 and scale in [0.9, 1.1].
volumes::Volume3D perturb(const volumes::Volume3D& ct, double noise_sigma_hu, double intensity_scale,
                          std::uint64_t seed);

/// Options of the random case generator.
struct SuiteOptions {
    int min_lesions = 2;
    int max_lesions = 4;
    double min_radius_mm = 4.0;
    double max_radius_mm = 12.0;
    int vessels = 2;
    double noise_sigma_hu = 5.0;
    Degradation degradation{1.0, 1.0, 0.0005, 0.85, 0.5, 0.25};
};

/// Random but seed-determined case: liver, non-overlapping lesions and
/// vessels kept clear of the lesions.
PhantomSpec random_spec(std::uint64_t seed, const SuiteOptions& options = {});

/// n cases with seeds derived from the master seed.
std::vector<PhantomSpec> phantom_suite(std::size_t n, std::uint64_t seed, const SuiteOptions& options = {});

} // namespace livseg::phantom
