#include "livseg/postproc/postproc.hpp"

#include <cmath>

namespace livseg::postproc {

using volumes::Grid;

double Histogram256::total() const noexcept {
    double t = 0.0;
    for (double c : counts) t += c;
    return t;
}

Histogram256 Histogram256::normalize() const {
    Histogram256 out;
    out.normalized = true;
    const double t = total();
    if (!(t > 0.0)) return out;
    for (int k = 0; k < 256; ++k) out.counts[k] = counts[k] / t;
    return out;
}

OtsuResult otsu_threshold(const Histogram256& h) {
    int levels = 0;
    for (double c : h.counts) {
        if (c < 0.0 || !std::isfinite(c)) throw InvalidArgument("histogram counts must be finite and non-negative");
        if (c > 0.0) ++levels;
    }
    if (levels < 2) throw DegenerateHistogramError("histogram has mass in fewer than two gray levels");
    const Histogram256 n = h.normalized ? h : h.normalize();

    // Suffix sums give exactly zero mass for an empty upper class.
    std::array<double, 257> upper_mass{}, upper_moment{};
    for (int k = 255; k >= 0; --k) {
        upper_mass[k] = upper_mass[k + 1] + n.counts[k];
        upper_moment[k] = upper_moment[k + 1] + k * n.counts[k];
    }

    OtsuResult best;
    best.variance = -1.0;
    double w0 = 0.0, m0 = 0.0;
    for (int tau = 0; tau <= 254; ++tau) {
        w0 += n.counts[tau];
        m0 += tau * n.counts[tau];
        const double w1 = upper_mass[tau + 1];
        double var = 0.0, mu0 = 0.0, mu1 = 0.0;
        if (w0 > 0.0 && w1 > 0.0) {
            mu0 = m0 / w0;
            mu1 = upper_moment[tau + 1] / w1;
            var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        }
        if (var > best.variance) best = {tau, w0, w1, mu0, mu1, var};
    }
    return best;
}

Histogram256 level_histogram(const ProbMap3D& p) {
    Histogram256 h;
    for (float v : p.data()) h.counts[probability_level(v)] += 1.0;
    return h;
}

BinarizeResult binarize(const ProbMap3D& p, ThresholdMode mode, int fixed_tau) {
    int tau = fixed_tau;
    if (mode == ThresholdMode::OtsuPerVolume) tau = otsu_threshold(level_histogram(p)).tau_star;
    std::vector<std::uint8_t> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = probability_level(p[i]) > tau ? 1 : 0;
    return {Mask3D(p.grid(), std::move(out)), tau};
}

namespace {

// 3x3 in-plane erosion (erode=true) or dilation of one slice.
void filter_slice(const Mask3D& in, Mask3D& out, int z, bool erode) {
    const auto d = in.dims();
    for (int y = 0; y < d.ny; ++y)
        for (int x = 0; x < d.nx; ++x) {
            bool all = true, any = false;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int a = x + dx, b = y + dy;
                    const bool inside = a >= 0 && b >= 0 && a < d.nx && b < d.ny;
                    const bool v = inside && in.test(a, b, z);
                    all = all && v;
                    any = any || v;
                }
            out.set(x, y, z, erode ? all : any);
        }
}

} // namespace

Mask3D morph_smooth(const Mask3D& m) {
    Mask3D eroded(m.grid());
    Mask3D out(m.grid());
    for (int z = 0; z < m.dims().nz; ++z) {
        filter_slice(m, eroded, z, true);
        filter_slice(eroded, out, z, false);
    }
    return out;
}

Mask3D temporal_refine(const Mask3D& y, const ProbMap3D& p, bool suppress_isolated) {
    volumes::require_same_grid(y.grid(), p.grid(), "temporal_refine");
    const Grid& g = y.grid();
    const auto d = g.dims;
    Mask3D out = y;
    for (int z = 1; z + 1 < d.nz; ++z)
        for (int yy = 0; yy < d.ny; ++yy)
            for (int x = 0; x < d.nx; ++x) {
                const std::size_t i = g.index(x, yy, z);
                const std::size_t below = g.index(x, yy, z - 1);
                const std::size_t above = g.index(x, yy, z + 1);
                const bool prev = y.test(below), next = y.test(above);
                if (y.test(i)) {
                    if (suppress_isolated && !prev && !next) out.set(i, false);
                } else if (prev && next) {
                    const double mean = (static_cast<double>(p[below]) + static_cast<double>(p[above])) / 2.0;
                    if (mean > kRestoreThreshold) out.set(i, true);
                }
            }
    return out;
}

} // namespace livseg::postproc
