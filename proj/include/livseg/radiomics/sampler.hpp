#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "livseg/radiomics/region.hpp"

namespace livseg::radiomics {

struct SamplerConfig {
    int r_min = 2;
    int r_step = 2;
    int r_max = 48;
    int quota_total = 1000;
    double boundary_fraction = 0.6;
    int max_retries = 100;
    double reject_outside_liver = 0.20;
    double reject_tumor_fraction = 0.10;
    std::uint64_t seed = 0;

    std::vector<int> radii() const;
    void validate() const;

    friend bool operator==(const SamplerConfig&, const SamplerConfig&) = default;
};

/// Per-radius slot plan. Quotas are floor(total / R) with the remainder
/// handed to the smallest radii; the boundary share is rounded on the
/// cumulative count so the overall split matches the target fraction.
struct RadiusPlan {
    int radius = 0;
    int quota = 0;
    int boundary = 0;
    int interior() const noexcept { return quota - boundary; }
};
std::vector<RadiusPlan> plan_quotas(const SamplerConfig& cfg);

enum class SeedKind : std::uint8_t { Boundary, Interior };

struct SampledRegion {
    CandidateRegion region;
    int radius = 0;
    SeedKind kind = SeedKind::Boundary;
    std::size_t seed_voxel = 0;
    int attempts = 0;
};

struct SamplerWarning {
    int radius = 0;
    int slot = 0;
    std::string message;
};

struct SamplerResult {
    std::vector<SampledRegion> regions;
    std::vector<SamplerWarning> warnings;
};

/// Fractions of a ball that fall outside the liver (out-of-grid counts as
/// outside) and inside the tumor.
struct BallStats {
    std::size_t total = 0;
    std::size_t outside = 0;
    std::size_t tumor = 0;
};
BallStats ball_stats(const Mask3D& liver, const Mask3D& tumor, volumes::Index3 centre, int radius);

/// True when the ball would be rejected by the sampler's thresholds.
bool reject_ball(const BallStats& s, const SamplerConfig& cfg);

/// Spherical negative regions seeded inside and near the edge of the liver.
/// Throws InvalidArgument for mismatched grids or an empty liver.
SamplerResult sample_negative_regions(const Volume3D& ct, const Mask3D& liver, const Mask3D& tumor,
                                      const SamplerConfig& cfg);

} // namespace livseg::radiomics
