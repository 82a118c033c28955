#include <algorithm>
#include <cmath>

#include "livseg/radiomics/features.hpp"
#include "livseg/volumes/preprocess.hpp"

namespace livseg::radiomics {

std::vector<double> RegionField::roi_values() const {
    std::vector<double> out;
    out.reserve(roi.size());
    for (auto i : roi) out.push_back(values[i]);
    return out;
}

RegionField make_region_field(const CandidateRegion& region, const Volume3D& volume, int margin) {
    if (region.voxels.empty()) throw InvalidArgument("feature extraction: empty region");
    if (region.grid.dims != volume.dims()) throw GridMismatchError("feature extraction: region is not on the volume grid");
    const auto& d = volume.dims();
    const auto& b = region.bbox;
    const Index3 lo{std::max(0, b.lo.x - margin), std::max(0, b.lo.y - margin), std::max(0, b.lo.z - margin)};
    const Index3 hi{std::min(d.nx - 1, b.hi.x + margin), std::min(d.ny - 1, b.hi.y + margin),
                    std::min(d.nz - 1, b.hi.z + margin)};

    RegionField f;
    f.grid = {{hi.x - lo.x + 1, hi.y - lo.y + 1, hi.z - lo.z + 1}, volume.spacing()};
    f.quantization = volume.kind() == volumes::ValueKind::Normalized8 ? Quantization::Fixed : Quantization::MinMax;
    f.values.resize(f.grid.size());
    f.inside.assign(f.grid.size(), 0);
    for (int z = lo.z; z <= hi.z; ++z)
        for (int y = lo.y; y <= hi.y; ++y)
            for (int x = lo.x; x <= hi.x; ++x)
                f.values[f.grid.index(x - lo.x, y - lo.y, z - lo.z)] = volume.at(x, y, z);
    f.roi.reserve(region.voxels.size());
    for (auto v : region.voxels) {
        const auto p = region.grid.coords(v);
        const auto i = f.grid.index(p.x - lo.x, p.y - lo.y, p.z - lo.z);
        f.inside[i] = 1;
        f.roi.push_back(i);
    }
    std::sort(f.roi.begin(), f.roi.end());
    return f;
}

std::vector<int> quantize(const RegionField& f, int levels) {
    std::vector<int> q(f.values.size(), -1);
    if (f.roi.empty()) return q;
    if (f.quantization == Quantization::Fixed) {
        const double width = 256.0 / levels;
        for (auto i : f.roi) q[i] = std::clamp(static_cast<int>(std::floor(f.values[i] / width)), 0, levels - 1);
        return q;
    }
    double lo = f.values[f.roi.front()], hi = lo;
    for (auto i : f.roi) {
        lo = std::min(lo, f.values[i]);
        hi = std::max(hi, f.values[i]);
    }
    for (auto i : f.roi)
        q[i] = hi > lo ? std::clamp(static_cast<int>(std::floor((f.values[i] - lo) / (hi - lo) * levels)), 0, levels - 1)
                       : 0;
    return q;
}

const std::array<Index3, 13>& unique_directions() {
    static const std::array<Index3, 13> dirs{{{1, 0, 0},
                                              {0, 1, 0},
                                              {0, 0, 1},
                                              {1, 1, 0},
                                              {1, -1, 0},
                                              {1, 0, 1},
                                              {1, 0, -1},
                                              {0, 1, 1},
                                              {0, 1, -1},
                                              {1, 1, 1},
                                              {1, 1, -1},
                                              {1, -1, 1},
                                              {1, -1, -1}}};
    return dirs;
}

GradientStats gradient_features(const RegionField& f, double sigma_voxels) {
    const auto& g = f.grid;
    std::vector<double> s = f.values;
    volumes::gaussian_filter(g, s, sigma_voxels);
    const auto& d = g.dims;
    const double sp[3] = {g.spacing.sx, g.spacing.sy, g.spacing.sz};

    double sum = 0.0, sum_sq = 0.0;
    std::vector<double> mags;
    mags.reserve(f.roi.size());
    for (auto i : f.roi) {
        const auto p = g.coords(i);
        const int c[3] = {p.x, p.y, p.z};
        const int n[3] = {d.nx, d.ny, d.nz};
        double m2 = 0.0;
        for (int ax = 0; ax < 3; ++ax) {
            int lo[3] = {p.x, p.y, p.z}, hi[3] = {p.x, p.y, p.z};
            lo[ax] = std::max(c[ax] - 1, 0);
            hi[ax] = std::min(c[ax] + 1, n[ax] - 1);
            const double gv = (s[g.index(hi[0], hi[1], hi[2])] - s[g.index(lo[0], lo[1], lo[2])]) / (2.0 * sp[ax]);
            m2 += gv * gv;
        }
        const double m = std::sqrt(m2);
        mags.push_back(m);
        sum += m;
    }
    const double n = static_cast<double>(mags.size());
    const double mean = sum / n;
    for (double m : mags) sum_sq += (m - mean) * (m - mean);
    return {mean, std::sqrt(sum_sq / n)};
}

} // namespace livseg::radiomics
