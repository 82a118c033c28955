#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "livseg/radiomics/features.hpp"

namespace livseg::radiomics {

namespace {

// Voxels that are the first or last ROI voxel along their x row, y column and
// z column. Every vertex of the convex hull is among them, so the diameter
// can be searched on this subset.
std::vector<Index3> extreme_voxels(const RegionField& f) {
    const auto& g = f.grid;
    const auto& d = g.dims;
    const int big = 1 << 30;
    // First/last ROI coordinate along each x row, y column and z column.
    std::vector<int> xlo(static_cast<std::size_t>(d.ny) * d.nz, big), xhi(xlo.size(), -1);
    std::vector<int> ylo(static_cast<std::size_t>(d.nx) * d.nz, big), yhi(ylo.size(), -1);
    std::vector<int> zlo(static_cast<std::size_t>(d.nx) * d.ny, big), zhi(zlo.size(), -1);
    for (auto i : f.roi) {
        const auto p = g.coords(i);
        const std::size_t rx = static_cast<std::size_t>(p.z) * d.ny + p.y;
        const std::size_t ry = static_cast<std::size_t>(p.z) * d.nx + p.x;
        const std::size_t rz = static_cast<std::size_t>(p.y) * d.nx + p.x;
        xlo[rx] = std::min(xlo[rx], p.x);
        xhi[rx] = std::max(xhi[rx], p.x);
        ylo[ry] = std::min(ylo[ry], p.y);
        yhi[ry] = std::max(yhi[ry], p.y);
        zlo[rz] = std::min(zlo[rz], p.z);
        zhi[rz] = std::max(zhi[rz], p.z);
    }
    std::vector<Index3> out;
    for (auto i : f.roi) {
        const auto p = g.coords(i);
        const std::size_t rx = static_cast<std::size_t>(p.z) * d.ny + p.y;
        const std::size_t ry = static_cast<std::size_t>(p.z) * d.nx + p.x;
        const std::size_t rz = static_cast<std::size_t>(p.y) * d.nx + p.x;
        if ((p.x == xlo[rx] || p.x == xhi[rx]) && (p.y == ylo[ry] || p.y == yhi[ry]) &&
            (p.z == zlo[rz] || p.z == zhi[rz]))
            out.push_back(p);
    }
    return out;
}

} // namespace

Shape shape_features(const RegionField& f) {
    const auto& g = f.grid;
    const auto& s = g.spacing;
    const double n = static_cast<double>(f.roi.size());
    const double volume = n * g.voxel_volume();

    double area = 0.0;
    const double face[3] = {s.sy * s.sz, s.sx * s.sz, s.sx * s.sy};
    double cx = 0.0, cy = 0.0, cz = 0.0;
    for (auto i : f.roi) {
        const auto p = g.coords(i);
        if (!f.in_roi(p.x - 1, p.y, p.z)) area += face[0];
        if (!f.in_roi(p.x + 1, p.y, p.z)) area += face[0];
        if (!f.in_roi(p.x, p.y - 1, p.z)) area += face[1];
        if (!f.in_roi(p.x, p.y + 1, p.z)) area += face[1];
        if (!f.in_roi(p.x, p.y, p.z - 1)) area += face[2];
        if (!f.in_roi(p.x, p.y, p.z + 1)) area += face[2];
        cx += p.x * s.sx;
        cy += p.y * s.sy;
        cz += p.z * s.sz;
    }
    cx /= n;
    cy /= n;
    cz /= n;
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (auto i : f.roi) {
        const auto p = g.coords(i);
        const Eigen::Vector3d d(p.x * s.sx - cx, p.y * s.sy - cy, p.z * s.sz - cz);
        cov += d * d.transpose();
    }
    cov /= n;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov, Eigen::EigenvaluesOnly);
    Eigen::Vector3d lam = eig.eigenvalues().cwiseMax(0.0); // ascending
    const double l1 = lam(2), l2 = lam(1), l3 = lam(0);

    const auto ext = extreme_voxels(f);
    double diam2 = 0.0;
    for (std::size_t a = 0; a < ext.size(); ++a)
        for (std::size_t b = a + 1; b < ext.size(); ++b) {
            const double dx = (ext[a].x - ext[b].x) * s.sx, dy = (ext[a].y - ext[b].y) * s.sy,
                         dz = (ext[a].z - ext[b].z) * s.sz;
            diam2 = std::max(diam2, dx * dx + dy * dy + dz * dz);
        }

    const double pi = std::numbers::pi;
    Shape out{};
    out[0] = volume;
    out[1] = area;
    out[2] = std::cbrt(pi) * std::pow(6.0 * volume, 2.0 / 3.0) / area;
    out[3] = volume / (std::sqrt(pi) * std::pow(area, 1.5));
    out[4] = 36.0 * pi * volume * volume / (area * area * area);
    out[5] = l1 > 0.0 ? std::sqrt(l2 / l1) : 0.0;
    out[6] = l1 > 0.0 ? std::sqrt(l3 / l1) : 0.0;
    out[7] = std::sqrt(diam2);
    return out;
}

Moments moment_invariants(const RegionField& f) {
    const auto& g = f.grid;
    const auto& s = g.spacing;
    double total = 0.0;
    for (auto i : f.roi) total += std::abs(f.values[i]);
    const bool uniform = total == 0.0;
    if (uniform) total = static_cast<double>(f.roi.size());
    auto weight = [&](std::size_t i) { return uniform ? 1.0 : std::abs(f.values[i]); };

    double c[3] = {0, 0, 0};
    for (auto i : f.roi) {
        const auto p = g.coords(i);
        const double w = weight(i);
        c[0] += w * p.x * s.sx;
        c[1] += w * p.y * s.sy;
        c[2] += w * p.z * s.sz;
    }
    for (double& v : c) v /= total;
    double m[3][3] = {};
    for (auto i : f.roi) {
        const auto p = g.coords(i);
        const double w = weight(i);
        const double d[3] = {p.x * s.sx - c[0], p.y * s.sy - c[1], p.z * s.sz - c[2]};
        for (int a = 0; a < 3; ++a)
            for (int b = a; b < 3; ++b) m[a][b] += w * d[a] * d[b];
    }
    for (int a = 0; a < 3; ++a)
        for (int b = a; b < 3; ++b) {
            m[a][b] /= total;
            m[b][a] = m[a][b];
        }
    const double j1 = m[0][0] + m[1][1] + m[2][2];
    const double j2 = m[0][0] * m[1][1] + m[0][0] * m[2][2] + m[1][1] * m[2][2] - m[0][1] * m[0][1] -
                      m[0][2] * m[0][2] - m[1][2] * m[1][2];
    const double j3 = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[1][2]) -
                      m[0][1] * (m[0][1] * m[2][2] - m[1][2] * m[0][2]) +
                      m[0][2] * (m[0][1] * m[1][2] - m[1][1] * m[0][2]);
    return {j1, j2, j3};
}

} // namespace livseg::radiomics
