#include "livseg/volumes/preprocess.hpp"

#include <algorithm>
#include <cmath>

namespace livseg::volumes {

float rescale_hu_value(double hu) noexcept {
    const double c = std::clamp(hu, kHuWindowLow, kHuWindowHigh);
    return static_cast<float>(std::round(255.0 * (c - kHuWindowLow) / (kHuWindowHigh - kHuWindowLow)));
}

Volume3D clip_rescale_hu(const Volume3D& v) {
    if (v.kind() != ValueKind::HuFloat) throw InvalidArgument("clip_rescale_hu expects an HU-float volume");
    std::vector<float> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = rescale_hu_value(v[i]);
    return Volume3D(v.grid(), ValueKind::Normalized8, std::move(out));
}

Volume3D standardize_intensity(const Volume3D& hu, const Mask3D& region, double reference_hu) {
    if (hu.kind() != ValueKind::HuFloat) throw InvalidArgument("standardize_intensity expects an HU-float volume");
    require_same_grid(hu.grid(), region.grid(), "standardize_intensity");
    std::vector<float> vals;
    for (std::size_t i = 0; i < hu.size(); ++i)
        if (region.test(i)) vals.push_back(hu[i]);
    if (vals.empty()) return hu;
    const auto mid = vals.begin() + static_cast<std::ptrdiff_t>(vals.size() / 2);
    std::nth_element(vals.begin(), mid, vals.end());
    const double median = *mid;
    if (median < 1.0) return hu;
    const double f = reference_hu / median;
    std::vector<float> out(hu.size());
    for (std::size_t i = 0; i < hu.size(); ++i) out[i] = static_cast<float>(f * hu[i]);
    return Volume3D(hu.grid(), ValueKind::HuFloat, std::move(out));
}

std::vector<double> gaussian_kernel(double sigma) {
    if (sigma <= 0.0) return {1.0};
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * r + 1);
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) sum += k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
    for (auto& v : k) v /= sum;
    return k;
}

namespace {

void convolve_axis(const Grid& g, const std::vector<double>& in, std::vector<double>& out,
                   const std::vector<double>& k, int axis) {
    const int r = static_cast<int>(k.size() / 2);
    const auto& d = g.dims;
    const int n = axis == 0 ? d.nx : axis == 1 ? d.ny : d.nz;
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) {
                const int c = axis == 0 ? x : axis == 1 ? y : z;
                double acc = 0.0;
                for (int t = -r; t <= r; ++t) {
                    const int p = std::clamp(c + t, 0, n - 1);
                    const std::size_t idx = axis == 0 ? g.index(p, y, z) : axis == 1 ? g.index(x, p, z) : g.index(x, y, p);
                    acc += k[t + r] * in[idx];
                }
                out[g.index(x, y, z)] = acc;
            }
}

} // namespace

void gaussian_filter(const Grid& g, std::vector<double>& values, double sigma_voxels) {
    if (values.size() != g.dims.count()) throw InvalidArgument("gaussian_filter: buffer does not match grid");
    if (sigma_voxels <= 0.0) return;
    const auto k = gaussian_kernel(sigma_voxels);
    std::vector<double> tmp(values.size());
    convolve_axis(g, values, tmp, k, 0);
    convolve_axis(g, tmp, values, k, 1);
    convolve_axis(g, values, tmp, k, 2);
    values.swap(tmp);
}

Volume3D gaussian_smooth(const Volume3D& v, double sigma_voxels) {
    if (!(sigma_voxels >= 0.0)) throw InvalidArgument("gaussian_smooth: sigma must be non-negative");
    std::vector<double> buf(v.data().begin(), v.data().end());
    gaussian_filter(v.grid(), buf, sigma_voxels);
    const bool levels = v.kind() == ValueKind::Normalized8;
    std::vector<float> out(buf.size());
    for (std::size_t i = 0; i < buf.size(); ++i)
        out[i] = levels ? static_cast<float>(std::clamp(std::round(buf[i]), 0.0, 255.0)) : static_cast<float>(buf[i]);
    return Volume3D(v.grid(), v.kind(), std::move(out));
}

namespace {

struct AxisMap {
    std::vector<int> i0;
    std::vector<double> frac;
};

AxisMap axis_map(int n_in, double s_in, int n_out, double s_out) {
    AxisMap m;
    m.i0.resize(n_out);
    m.frac.resize(n_out);
    for (int i = 0; i < n_out; ++i) {
        double pos = static_cast<double>(i) * s_out / s_in;
        if (pos >= n_in - 1) {
            m.i0[i] = n_in - 1;
            m.frac[i] = 0.0;
        } else {
            const int k = static_cast<int>(std::floor(pos));
            m.i0[i] = k;
            m.frac[i] = pos - k;
        }
    }
    return m;
}

int resampled_extent(int n, double s_in, double s_out) {
    return static_cast<int>(std::lround(static_cast<double>(n) * s_in / s_out));
}

// v0 + f*(v1 - v0) keeps constants exact.
inline double lerp(double a, double b, double f) { return f == 0.0 ? a : a + f * (b - a); }

} // namespace

Volume3D resample(const Volume3D& v, const Spacing& target) {
    if (!(target.sx > 0) || !(target.sy > 0) || !(target.sz > 0))
        throw InvalidArgument("resample: target spacing must be positive");
    const Dims& d = v.dims();
    const Spacing& s = v.spacing();
    const Dims nd{resampled_extent(d.nx, s.sx, target.sx), resampled_extent(d.ny, s.sy, target.sy),
                  resampled_extent(d.nz, s.sz, target.sz)};
    if (nd.nx <= 0 || nd.ny <= 0 || nd.nz <= 0)
        throw InvalidArgument("resample: target spacing collapses a dimension to zero voxels");
    const AxisMap mx = axis_map(d.nx, s.sx, nd.nx, target.sx);
    const AxisMap my = axis_map(d.ny, s.sy, nd.ny, target.sy);
    const AxisMap mz = axis_map(d.nz, s.sz, nd.nz, target.sz);
    auto sample = [&](int x, int y, int z) -> double { return v.at(x, y, z); };

    std::vector<float> out(nd.count());
    std::size_t o = 0;
    for (int z = 0; z < nd.nz; ++z) {
        const int z0 = mz.i0[z], z1 = std::min(z0 + 1, d.nz - 1);
        const double fz = mz.frac[z];
        for (int y = 0; y < nd.ny; ++y) {
            const int y0 = my.i0[y], y1 = std::min(y0 + 1, d.ny - 1);
            const double fy = my.frac[y];
            for (int x = 0; x < nd.nx; ++x, ++o) {
                const int x0 = mx.i0[x], x1 = std::min(x0 + 1, d.nx - 1);
                const double fx = mx.frac[x];
                const double c00 = lerp(sample(x0, y0, z0), sample(x1, y0, z0), fx);
                const double c10 = lerp(sample(x0, y1, z0), sample(x1, y1, z0), fx);
                const double c01 = lerp(sample(x0, y0, z1), sample(x1, y0, z1), fx);
                const double c11 = lerp(sample(x0, y1, z1), sample(x1, y1, z1), fx);
                const double c0 = lerp(c00, c10, fy);
                const double c1 = lerp(c01, c11, fy);
                double val = lerp(c0, c1, fz);
                if (v.kind() == ValueKind::Normalized8) val = std::clamp(std::round(val), 0.0, 255.0);
                out[o] = static_cast<float>(val);
            }
        }
    }
    return Volume3D(Grid{nd, target}, v.kind(), std::move(out));
}

Volume3D resample_isotropic(const Volume3D& v, double target_mm) {
    return resample(v, Spacing{target_mm, target_mm, target_mm});
}

namespace {

template <class T, class Make>
auto crop_impl(const Field<T>& f, const BoundingBox& box, T fill, Make make) {
    const Dims ext = box.extent();
    if (ext.nx <= 0 || ext.ny <= 0 || ext.nz <= 0) throw InvalidArgument("crop: empty box");
    std::vector<T> out(ext.count(), fill);
    const Grid& g = f.grid();
    std::size_t o = 0;
    for (int z = box.lo.z; z <= box.hi.z; ++z)
        for (int y = box.lo.y; y <= box.hi.y; ++y)
            for (int x = box.lo.x; x <= box.hi.x; ++x, ++o)
                if (g.contains(x, y, z)) out[o] = f.at(x, y, z);
    return make(Grid{ext, g.spacing}, std::move(out));
}

} // namespace

Volume3D crop(const Volume3D& v, const BoundingBox& box, float fill) {
    return crop_impl<float>(v, box, fill,
                            [&](Grid g, std::vector<float> d) { return Volume3D(g, v.kind(), std::move(d)); });
}

Mask3D crop(const Mask3D& m, const BoundingBox& box) {
    return crop_impl<std::uint8_t>(m, box, 0, [](Grid g, std::vector<std::uint8_t> d) { return Mask3D(g, std::move(d)); });
}

ProbMap3D crop(const ProbMap3D& p, const BoundingBox& box) {
    return crop_impl<float>(p, box, 0.0f, [](Grid g, std::vector<float> d) { return ProbMap3D(g, std::move(d)); });
}

SliceStack extract_slice_stack(const Volume3D& v, int z, const ProbMap3D* liver_prior) {
    const Dims& d = v.dims();
    if (z < 0 || z >= d.nz) throw InvalidArgument("extract_slice_stack: slice index out of range");
    if (liver_prior) require_same_grid(v.grid(), liver_prior->grid(), "extract_slice_stack liver prior");
    SliceStack stack;
    stack.nx = d.nx;
    stack.ny = d.ny;
    stack.center_index = z;
    const std::size_t plane = static_cast<std::size_t>(d.nx) * d.ny;
    auto copy_plane = [&](std::span<const float> src, int k) {
        const auto begin = src.begin() + static_cast<std::ptrdiff_t>(plane * k);
        return std::vector<float>(begin, begin + static_cast<std::ptrdiff_t>(plane));
    };
    for (int k : {std::max(z - 1, 0), z, std::min(z + 1, d.nz - 1)}) stack.channels.push_back(copy_plane(v.data(), k));
    if (liver_prior) stack.channels.push_back(copy_plane(liver_prior->data(), z));
    return stack;
}

} // namespace livseg::volumes
