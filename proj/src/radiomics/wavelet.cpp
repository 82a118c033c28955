#include "livseg/radiomics/wavelet.hpp"

#include <cmath>
#include <numbers>

namespace livseg::radiomics {

namespace {

using volumes::Dims;
using volumes::Grid;

constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

// Splits `in` (dims d) along one axis into low and high halves stored
// side by side: output index along the axis is k for L and half + k for H.
std::vector<double> split_axis(const std::vector<double>& in, Dims d, int axis, Dims& out_dims) {
    const int n = axis == 0 ? d.nx : axis == 1 ? d.ny : d.nz;
    const int half = (n + 1) / 2;
    out_dims = d;
    (axis == 0 ? out_dims.nx : axis == 1 ? out_dims.ny : out_dims.nz) = 2 * half;
    const Grid gi{d, {}}, go{out_dims, {}};
    std::vector<double> out(go.size());
    for (int z = 0; z < out_dims.nz; ++z)
        for (int y = 0; y < out_dims.ny; ++y)
            for (int x = 0; x < out_dims.nx; ++x) {
                int c[3] = {x, y, z};
                if (c[axis] >= half) continue;
                const int k = c[axis];
                int a[3] = {x, y, z}, b[3] = {x, y, z};
                a[axis] = 2 * k;
                b[axis] = std::min(2 * k + 1, n - 1);
                const double va = in[gi.index(a[0], a[1], a[2])];
                const double vb = in[gi.index(b[0], b[1], b[2])];
                out[go.index(x, y, z)] = (va + vb) * kInvSqrt2;
                c[axis] = half + k;
                out[go.index(c[0], c[1], c[2])] = (va - vb) * kInvSqrt2;
            }
    return out;
}

std::vector<double> merge_axis(const std::vector<double>& in, Dims d, int axis) {
    const int n = axis == 0 ? d.nx : axis == 1 ? d.ny : d.nz;
    const int half = n / 2;
    const Grid g{d, {}};
    std::vector<double> out(g.size());
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) {
                int c[3] = {x, y, z};
                if (c[axis] >= half) continue;
                const int k = c[axis];
                int h[3] = {x, y, z};
                h[axis] = half + k;
                const double lo = in[g.index(x, y, z)], hi = in[g.index(h[0], h[1], h[2])];
                int a[3] = {x, y, z}, b[3] = {x, y, z};
                a[axis] = 2 * k;
                b[axis] = 2 * k + 1;
                out[g.index(a[0], a[1], a[2])] = (lo + hi) * kInvSqrt2;
                out[g.index(b[0], b[1], b[2])] = (lo - hi) * kInvSqrt2;
            }
    return out;
}

} // namespace

HaarBands haar_analysis(const RealField& input) {
    Dims d = input.dims();
    std::vector<double> cur(input.data().begin(), input.data().end());
    for (int axis = 0; axis < 3; ++axis) {
        Dims next;
        cur = split_axis(cur, d, axis, next);
        d = next;
    }
    const Dims bd{d.nx / 2, d.ny / 2, d.nz / 2};
    const auto& s = input.spacing();
    const Grid bg{bd, {2 * s.sx, 2 * s.sy, 2 * s.sz}};
    const Grid full{d, {}};
    HaarBands out;
    for (int band = 0; band < 8; ++band) {
        const int hx = (band >> 2) & 1, hy = (band >> 1) & 1, hz = band & 1;
        std::vector<double> v(bg.size());
        for (int z = 0; z < bd.nz; ++z)
            for (int y = 0; y < bd.ny; ++y)
                for (int x = 0; x < bd.nx; ++x)
                    v[bg.index(x, y, z)] = cur[full.index(x + hx * bd.nx, y + hy * bd.ny, z + hz * bd.nz)];
        out[band] = RealField(bg, std::move(v));
    }
    return out;
}

RealField haar_synthesis(const HaarBands& bands) {
    const Dims bd = bands[0].dims();
    for (const auto& b : bands)
        if (b.dims() != bd) throw InvalidArgument("haar_synthesis: sub-band dims differ");
    const Dims d{2 * bd.nx, 2 * bd.ny, 2 * bd.nz};
    const Grid full{d, {}};
    std::vector<double> cur(full.size());
    for (int band = 0; band < 8; ++band) {
        const int hx = (band >> 2) & 1, hy = (band >> 1) & 1, hz = band & 1;
        for (int z = 0; z < bd.nz; ++z)
            for (int y = 0; y < bd.ny; ++y)
                for (int x = 0; x < bd.nx; ++x)
                    cur[full.index(x + hx * bd.nx, y + hy * bd.ny, z + hz * bd.nz)] = bands[band].at(x, y, z);
    }
    for (int axis = 2; axis >= 0; --axis) cur = merge_axis(cur, d, axis);
    const auto& s = bands[0].spacing();
    return RealField(Grid{d, {s.sx / 2, s.sy / 2, s.sz / 2}}, std::move(cur));
}

} // namespace livseg::radiomics
