#include "livseg/radiomics/region.hpp"

#include <algorithm>
#include <cmath>

#include "livseg/volumes/components.hpp"
#include "livseg/volumes/distance.hpp"

namespace livseg::radiomics {

Mask3D CandidateRegion::to_mask() const {
    Mask3D m(grid);
    for (auto v : voxels) m.set(v, true);
    return m;
}

CandidateRegion make_region(const Grid& grid, std::vector<std::size_t> voxels, RegionSource source,
                            RegionLabel label, int id) {
    if (voxels.empty()) throw InvalidArgument("candidate region must not be empty");
    std::sort(voxels.begin(), voxels.end());
    voxels.erase(std::unique(voxels.begin(), voxels.end()), voxels.end());
    if (voxels.back() >= grid.size()) throw InvalidArgument("candidate region voxel outside the grid");

    CandidateRegion r;
    r.id = id;
    r.grid = grid;
    r.source = source;
    r.label = label;
    const auto p0 = grid.coords(voxels.front());
    r.bbox = {p0, p0};
    for (auto v : voxels) {
        const auto p = grid.coords(v);
        r.bbox.lo = {std::min(r.bbox.lo.x, p.x), std::min(r.bbox.lo.y, p.y), std::min(r.bbox.lo.z, p.z)};
        r.bbox.hi = {std::max(r.bbox.hi.x, p.x), std::max(r.bbox.hi.y, p.y), std::max(r.bbox.hi.z, p.z)};
    }
    r.voxels = std::move(voxels);
    return r;
}

namespace {

std::vector<CandidateRegion> components_as_regions(const Mask3D& m, RegionSource source, RegionLabel label) {
    const auto lab = volumes::connected_components(m, volumes::Connectivity::TwentySix);
    std::vector<CandidateRegion> out;
    out.reserve(lab.components.size());
    for (const auto& c : lab.components) {
        CandidateRegion r;
        r.id = static_cast<int>(out.size());
        r.grid = m.grid();
        r.voxels = c.voxels;
        r.bbox = c.bbox;
        r.source = source;
        r.label = label;
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace

std::vector<CandidateRegion> extract_positive_regions(const Mask3D& tumor_gt) {
    return components_as_regions(tumor_gt, RegionSource::LesionComponent, RegionLabel::Positive);
}

std::vector<CandidateRegion> extract_candidate_regions(const Mask3D& predicted) {
    return components_as_regions(predicted, RegionSource::Candidate, RegionLabel::Unknown);
}

BandResult boundary_band(const CandidateRegion& region, double width) {
    if (region.voxels.empty()) throw InvalidArgument("boundary_band: empty region");
    if (!(width >= 0.0)) throw InvalidArgument("boundary_band: width must be non-negative");

    // Work on the bounding box padded so that outside distances up to `width`
    // are measured against real background, even past the volume edge.
    const int pad = static_cast<int>(std::ceil(width)) + 1;
    const auto& b = region.bbox;
    const volumes::Index3 lo{b.lo.x - pad, b.lo.y - pad, b.lo.z - pad};
    const Grid local{{b.hi.x - b.lo.x + 1 + 2 * pad, b.hi.y - b.lo.y + 1 + 2 * pad, b.hi.z - b.lo.z + 1 + 2 * pad},
                     region.grid.spacing};
    Mask3D m(local);
    for (auto v : region.voxels) {
        const auto p = region.grid.coords(v);
        m.set(p.x - lo.x, p.y - lo.y, p.z - lo.z, true);
    }
    const auto sdf = volumes::signed_edt(m);

    std::vector<std::size_t> band;
    for (std::size_t i = 0; i < local.size(); ++i) {
        if (!sdf.within(i, width)) continue;
        const auto q = local.coords(i);
        const int x = q.x + lo.x, y = q.y + lo.y, z = q.z + lo.z;
        if (region.grid.contains(x, y, z)) band.push_back(region.grid.index(x, y, z));
    }
    BandResult out;
    if (band.empty()) {
        out.band = region;
        out.fell_back = true;
    } else {
        out.band = make_region(region.grid, std::move(band), region.source, region.label, region.id);
    }
    return out;
}

} // namespace livseg::radiomics
