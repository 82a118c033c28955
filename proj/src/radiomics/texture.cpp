#include <algorithm>
#include <cmath>

#include "livseg/radiomics/features.hpp"

namespace livseg::radiomics {

namespace {

constexpr int kLevels = 128;

std::span<const Index3> or_all(std::span<const Index3> dirs) {
    if (!dirs.empty()) return dirs;
    const auto& all = unique_directions();
    return {all.data(), all.size()};
}

double plogp(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

} // namespace

RunLength rlm_features(const RegionField& f, std::span<const Index3> directions) {
    const auto dirs = or_all(directions);
    const auto q = quantize(f, kLevels);
    const auto& g = f.grid;
    const int max_len = std::max({g.dims.nx, g.dims.ny, g.dims.nz});
    std::vector<double> runs(static_cast<std::size_t>(kLevels) * (max_len + 1), 0.0);

    for (const auto& d : dirs)
        for (auto i : f.roi) {
            const auto p = g.coords(i);
            const int level = q[i];
            const int px = p.x - d.x, py = p.y - d.y, pz = p.z - d.z;
            if (f.in_roi(px, py, pz) && q[g.index(px, py, pz)] == level) continue; // not a run start
            int len = 1;
            int x = p.x + d.x, y = p.y + d.y, z = p.z + d.z;
            while (f.in_roi(x, y, z) && q[g.index(x, y, z)] == level) {
                ++len;
                x += d.x;
                y += d.y;
                z += d.z;
            }
            runs[static_cast<std::size_t>(level) * (max_len + 1) + len] += 1.0;
        }

    double nr = 0.0;
    RunLength out{};
    std::vector<double> per_level(kLevels, 0.0), per_len(max_len + 1, 0.0);
    for (int l = 0; l < kLevels; ++l)
        for (int j = 1; j <= max_len; ++j) {
            const double r = runs[static_cast<std::size_t>(l) * (max_len + 1) + j];
            if (r == 0.0) continue;
            const double i2 = static_cast<double>(l + 1) * (l + 1);
            const double j2 = static_cast<double>(j) * j;
            nr += r;
            per_level[l] += r;
            per_len[j] += r;
            out[0] += r / j2;
            out[1] += r * j2;
            out[5] += r / i2;
            out[6] += r * i2;
            out[7] += r / (i2 * j2);
            out[8] += r * i2 / j2;
            out[9] += r * j2 / i2;
            out[10] += r * i2 * j2;
        }
    for (double v : per_level) out[2] += v * v;
    for (double v : per_len) out[3] += v * v;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] /= nr;
    out[4] = nr / (static_cast<double>(dirs.size()) * static_cast<double>(f.roi.size()));
    return out;
}

Glcm glcm_features(const RegionField& f, std::span<const Index3> directions) {
    const auto dirs = or_all(directions);
    const auto q = quantize(f, kLevels);
    const auto& g = f.grid;
    std::vector<double> m(static_cast<std::size_t>(kLevels) * kLevels, 0.0);
    double total = 0.0;
    for (const auto& d : dirs)
        for (auto i : f.roi) {
            const auto p = g.coords(i);
            const int x = p.x + d.x, y = p.y + d.y, z = p.z + d.z;
            if (!f.in_roi(x, y, z)) continue;
            const int a = q[i], b = q[g.index(x, y, z)];
            m[static_cast<std::size_t>(a) * kLevels + b] += 1.0;
            m[static_cast<std::size_t>(b) * kLevels + a] += 1.0;
            total += 2.0;
        }
    if (total == 0.0) {
        // No neighbouring pairs (isolated voxels): treat as a constant region.
        const int a = q[f.roi.front()];
        m[static_cast<std::size_t>(a) * kLevels + a] = 1.0;
        total = 1.0;
    }

    struct Cell {
        int i, j;
        double p;
    };
    std::vector<Cell> cells;
    for (int a = 0; a < kLevels; ++a)
        for (int b = 0; b < kLevels; ++b) {
            const double v = m[static_cast<std::size_t>(a) * kLevels + b];
            if (v > 0.0) cells.push_back({a + 1, b + 1, v / total});
        }

    std::vector<double> px(kLevels + 1, 0.0), psum(2 * kLevels + 1, 0.0), pdiff(kLevels, 0.0);
    double mu = 0.0;
    for (const auto& c : cells) {
        px[c.i] += c.p;
        psum[c.i + c.j] += c.p;
        pdiff[std::abs(c.i - c.j)] += c.p;
        mu += c.i * c.p;
    }
    double var = 0.0;
    for (int i = 1; i <= kLevels; ++i) var += (i - mu) * (i - mu) * px[i];

    Glcm o{};
    double hxy = 0.0, hxy1 = 0.0, hxy2 = 0.0, hx = 0.0;
    double cross = 0.0;
    for (const auto& c : cells) {
        const double di = c.i - c.j;
        const double s = c.i + c.j - 2.0 * mu;
        o[0] += di * di * c.p;
        cross += (c.i - mu) * (c.j - mu) * c.p;
        o[2] += c.p * c.p;
        o[4] += c.p / (1.0 + di * di);
        o[5] += std::abs(di) * c.p;
        o[6] += static_cast<double>(c.i) * c.j * c.p;
        o[7] += s * s * s * c.p;
        o[8] += s * s * s * s * c.p;
        o[9] += s * s * c.p;
        o[10] = std::max(o[10], c.p);
        if (c.i != c.j) o[19] += c.p / (di * di);
        hxy -= plogp(c.p);
        hxy1 -= c.p * std::log2(px[c.i] * px[c.j]);
    }
    for (int i = 1; i <= kLevels; ++i) {
        if (px[i] <= 0.0) continue;
        hx -= plogp(px[i]);
        for (int j = 1; j <= kLevels; ++j)
            if (px[j] > 0.0) hxy2 -= plogp(px[i] * px[j]);
    }
    o[1] = var > 0.0 ? std::clamp(cross / var, -1.0, 1.0) : 1.0;
    o[3] = hxy;

    double sa = 0.0, se = 0.0;
    for (int k = 2; k <= 2 * kLevels; ++k) {
        sa += k * psum[k];
        se -= plogp(psum[k]);
    }
    double sv = 0.0;
    for (int k = 2; k <= 2 * kLevels; ++k) sv += (k - sa) * (k - sa) * psum[k];
    double da = 0.0, de = 0.0;
    for (int k = 0; k < kLevels; ++k) {
        da += k * pdiff[k];
        de -= plogp(pdiff[k]);
    }
    double dv = 0.0;
    for (int k = 0; k < kLevels; ++k) dv += (k - da) * (k - da) * pdiff[k];

    o[11] = sa;
    o[12] = sv;
    o[13] = se;
    o[14] = da;
    o[15] = dv;
    o[16] = de;
    o[17] = hx > 0.0 ? (hxy - hxy1) / hx : 0.0;
    o[18] = std::sqrt(std::max(0.0, 1.0 - std::exp(-2.0 * (hxy2 - hxy))));
    o[20] = mu;
    o[21] = var;
    return o;
}

} // namespace livseg::radiomics
