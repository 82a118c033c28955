#include "livseg/phantom/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "json.hpp"
#include "livseg/core/rng.hpp"

namespace livseg::phantom {

using volumes::Grid;
using volumes::Mask3D;
using volumes::ProbMap3D;
using volumes::Volume3D;

namespace {

using nlohmann::json;

Point voxel_point(const Grid& g, int x, int y, int z) {
    return {x * g.spacing.sx, y * g.spacing.sy, z * g.spacing.sz};
}

double sq(double v) { return v * v; }

double dist2(const Point& a, const Point& b) { return sq(a.x - b.x) + sq(a.y - b.y) + sq(a.z - b.z); }

double ellipsoid_value(const Point& p, const Point& c, const Point& r) {
    return sq((p.x - c.x) / r.x) + sq((p.y - c.y) / r.y) + sq((p.z - c.z) / r.z);
}

// A sphere fits when its centre lies in the ellipsoid shrunk by its radius
// plus a margin.
bool fits_in_liver(const Point& c, double radius, const LiverShape& liver, double margin = 0.0) {
    const double m = radius + margin;
    const Point shrunk{liver.radii.x - m, liver.radii.y - m, liver.radii.z - m};
    if (shrunk.x <= 0 || shrunk.y <= 0 || shrunk.z <= 0) return false;
    return ellipsoid_value(c, liver.center, shrunk) <= 1.0;
}

double segment_dist2(const Point& p, const Point& a, const Point& b) {
    const Point ab{b.x - a.x, b.y - a.y, b.z - a.z};
    const double len2 = ab.x * ab.x + ab.y * ab.y + ab.z * ab.z;
    double t = len2 > 0 ? ((p.x - a.x) * ab.x + (p.y - a.y) * ab.y + (p.z - a.z) * ab.z) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return dist2(p, {a.x + t * ab.x, a.y + t * ab.y, a.z + t * ab.z});
}

// Separable Gaussian with clamped borders; sigma in voxels.
std::vector<double> blur(const std::vector<double>& in, const volumes::Dims& d, double sigma) {
    if (sigma <= 0.0) return in;
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * r + 1);
    double s = 0.0;
    for (int i = -r; i <= r; ++i) s += k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
    for (double& v : k) v /= s;
    std::vector<double> a = in, b(in.size());
    const int n[3] = {d.nx, d.ny, d.nz};
    const std::size_t stride[3] = {1, static_cast<std::size_t>(d.nx), static_cast<std::size_t>(d.nx) * d.ny};
    for (int axis = 0; axis < 3; ++axis) {
        for (int z = 0; z < d.nz; ++z)
            for (int y = 0; y < d.ny; ++y)
                for (int x = 0; x < d.nx; ++x) {
                    const int c[3] = {x, y, z};
                    const std::size_t base = (static_cast<std::size_t>(z) * d.ny + y) * d.nx + x;
                    double acc = 0.0;
                    for (int o = -r; o <= r; ++o) {
                        const int q = std::clamp(c[axis] + o, 0, n[axis] - 1);
                        acc += k[o + r] * a[base + (static_cast<std::ptrdiff_t>(q) - c[axis]) * static_cast<std::ptrdiff_t>(stride[axis])];
                    }
                    b[base] = acc;
                }
        std::swap(a, b);
    }
    return a;
}

ProbMap3D to_probmap(const Grid& g, const std::vector<double>& v) {
    std::vector<float> f(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) f[i] = static_cast<float>(std::clamp(v[i], 0.0, 1.0));
    return ProbMap3D(g, std::move(f));
}

json point_json(const Point& p) { return json::array({p.x, p.y, p.z}); }

Point point_from(const json& j) {
    if (!j.is_array() || j.size() != 3) throw FormatError("phantom spec: points are [x, y, z] arrays");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

} // namespace

void PhantomSpec::validate() const {
    grid.validate();
    if (liver.radii.x <= 0 || liver.radii.y <= 0 || liver.radii.z <= 0)
        throw InvalidArgument("phantom: liver radii must be positive");
    for (std::size_t i = 0; i < lesions.size(); ++i) {
        const auto& l = lesions[i];
        if (!(l.radius_mm > 0)) throw InvalidArgument("phantom: lesion radius must be positive");
        if (!fits_in_liver(l.center, l.radius_mm, liver))
            throw InvalidArgument("phantom: lesion " + std::to_string(i) + " lies outside the liver");
    }
    for (const auto& v : vessels)
        if (!(v.radius_mm > 0)) throw InvalidArgument("phantom: vessel radius must be positive");
    if (noise_sigma_hu < 0) throw InvalidArgument("phantom: noise must be non-negative");
    const auto& d = degradation;
    if (d.blur_sigma_vox < 0 || d.boundary_shift_mm < 0 || d.vessel_leak < 0 || d.vessel_leak > 1 ||
        d.speckle_rate < 0 || d.speckle_rate > 1 || d.slice_dropout < 0 || d.slice_dropout > 1 ||
        d.dropout_factor < 0 || d.dropout_factor > 1)
        throw InvalidArgument("phantom: degradation parameter out of range");
}

std::string PhantomSpec::to_json() const {
    json j;
    j["format"] = "livseg.phantom_spec";
    j["version"] = 1;
    j["dims"] = {grid.dims.nx, grid.dims.ny, grid.dims.nz};
    j["spacing"] = {grid.spacing.sx, grid.spacing.sy, grid.spacing.sz};
    j["background_hu"] = background_hu;
    j["liver"] = {{"center", point_json(liver.center)}, {"radii", point_json(liver.radii)}, {"hu", liver.hu}};
    j["lesions"] = json::array();
    for (const auto& l : lesions)
        j["lesions"].push_back({{"center", point_json(l.center)}, {"radius_mm", l.radius_mm}, {"hu", l.hu}});
    j["vessels"] = json::array();
    for (const auto& v : vessels)
        j["vessels"].push_back(
            {{"a", point_json(v.a)}, {"b", point_json(v.b)}, {"radius_mm", v.radius_mm}, {"hu", v.hu}});
    j["noise_sigma_hu"] = noise_sigma_hu;
    const auto& d = degradation;
    j["degradation"] = {{"blur_sigma_vox", d.blur_sigma_vox},   {"boundary_shift_mm", d.boundary_shift_mm},
                        {"speckle_rate", d.speckle_rate},       {"vessel_leak", d.vessel_leak},
                        {"slice_dropout", d.slice_dropout},     {"dropout_factor", d.dropout_factor}};
    j["seed"] = seed;
    return j.dump(2);
}

PhantomSpec PhantomSpec::from_json(const std::string& text) {
    PhantomSpec s;
    try {
        const json j = json::parse(text);
        if (j.value("format", "") != "livseg.phantom_spec" || j.value("version", 0) != 1)
            throw FormatError("not a version-1 phantom spec");
        const auto& dm = j.at("dims");
        const auto& sp = j.at("spacing");
        s.grid = {{dm.at(0).get<int>(), dm.at(1).get<int>(), dm.at(2).get<int>()},
                  {sp.at(0).get<double>(), sp.at(1).get<double>(), sp.at(2).get<double>()}};
        s.background_hu = j.at("background_hu").get<double>();
        const auto& lv = j.at("liver");
        s.liver = {point_from(lv.at("center")), point_from(lv.at("radii")), lv.at("hu").get<double>()};
        for (const auto& l : j.at("lesions"))
            s.lesions.push_back({point_from(l.at("center")), l.at("radius_mm").get<double>(), l.at("hu").get<double>()});
        for (const auto& v : j.at("vessels"))
            s.vessels.push_back({point_from(v.at("a")), point_from(v.at("b")), v.at("radius_mm").get<double>(),
                                 v.at("hu").get<double>()});
        s.noise_sigma_hu = j.at("noise_sigma_hu").get<double>();
        const auto& d = j.at("degradation");
        s.degradation = {d.at("blur_sigma_vox").get<double>(), d.at("boundary_shift_mm").get<double>(),
                         d.at("speckle_rate").get<double>(),   d.at("vessel_leak").get<double>(),
                         d.at("slice_dropout").get<double>(),  d.at("dropout_factor").get<double>()};
        s.seed = j.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("phantom spec: ") + e.what());
    }
    s.validate();
    return s;
}

Phantom generate_phantom(const PhantomSpec& spec) {
    spec.validate();
    const Grid& g = spec.grid;
    const auto& dm = g.dims;
    const std::size_t n = g.size();
    Mask3D liver(g), tumor(g), vessels(g);
    std::vector<float> ct(n, static_cast<float>(spec.background_hu));

    const auto& deg = spec.degradation;
    std::vector<double> shifted_r(spec.lesions.size());
    for (std::size_t k = 0; k < spec.lesions.size(); ++k) {
        Rng rng = make_stream(spec.seed, "phantom.shift", {k});
        std::uniform_real_distribution<double> u(-deg.boundary_shift_mm, deg.boundary_shift_mm);
        const double shift = deg.boundary_shift_mm > 0 ? u(rng) : 0.0;
        shifted_r[k] = std::max(0.5, spec.lesions[k].radius_mm + shift);
    }

    std::vector<double> pred(n, 0.0), vessel_f(n, 0.0), liver_f(n, 0.0);
    for (int z = 0; z < dm.nz; ++z)
        for (int y = 0; y < dm.ny; ++y)
            for (int x = 0; x < dm.nx; ++x) {
                const std::size_t i = g.index(x, y, z);
                const Point p = voxel_point(g, x, y, z);
                if (ellipsoid_value(p, spec.liver.center, spec.liver.radii) > 1.0) continue;
                liver.set(i, true);
                liver_f[i] = 1.0;
                ct[i] = static_cast<float>(spec.liver.hu);
                bool in_tumor = false;
                for (std::size_t k = 0; k < spec.lesions.size(); ++k) {
                    const auto& l = spec.lesions[k];
                    const double d2 = dist2(p, l.center);
                    if (d2 <= sq(shifted_r[k])) pred[i] = 1.0;
                    if (!in_tumor && d2 <= sq(l.radius_mm)) {
                        in_tumor = true;
                        ct[i] = static_cast<float>(l.hu);
                    }
                }
                if (in_tumor) {
                    tumor.set(i, true);
                    continue;
                }
                for (const auto& v : spec.vessels)
                    if (segment_dist2(p, v.a, v.b) <= sq(v.radius_mm)) {
                        vessels.set(i, true);
                        vessel_f[i] = 1.0;
                        ct[i] = static_cast<float>(v.hu);
                        break;
                    }
            }

    if (spec.noise_sigma_hu > 0) {
        Rng rng = make_stream(spec.seed, "phantom.noise");
        std::normal_distribution<double> nd(0.0, spec.noise_sigma_hu);
        for (auto& v : ct) v = static_cast<float>(v + nd(rng));
    }

    std::vector<double> pt = blur(pred, dm, deg.blur_sigma_vox);
    if (deg.slice_dropout > 0) {
        for (std::size_t k = 0; k < spec.lesions.size(); ++k) {
            Rng rng = make_stream(spec.seed, "phantom.dropout", {k});
            std::uniform_real_distribution<double> u(0.0, 1.0);
            if (u(rng) >= deg.slice_dropout) continue;
            const auto& l = spec.lesions[k];
            // Faded slice strictly inside the lesion so both neighbours stay bright.
            const int zc = static_cast<int>(std::lround(l.center.z / g.spacing.sz));
            const int half = static_cast<int>(std::floor(0.5 * shifted_r[k] / g.spacing.sz));
            if (half < 1) continue;
            std::uniform_int_distribution<int> pick(zc - half + 1, zc + half - 1);
            const int z = half > 1 ? pick(rng) : zc;
            if (z < 1 || z >= dm.nz - 1) continue;
            const double reach = shifted_r[k] + 3.0 * deg.blur_sigma_vox * g.spacing.sx + 1.0;
            for (int y = 0; y < dm.ny; ++y)
                for (int x = 0; x < dm.nx; ++x) {
                    const Point p = voxel_point(g, x, y, z);
                    if (sq(p.x - l.center.x) + sq(p.y - l.center.y) <= sq(reach)) pt[g.index(x, y, z)] *= deg.dropout_factor;
                }
        }
    }
    if (deg.vessel_leak > 0) {
        const auto leak = blur(vessel_f, dm, deg.blur_sigma_vox);
        for (std::size_t i = 0; i < n; ++i) pt[i] = std::max(pt[i], deg.vessel_leak * leak[i]);
    }
    if (deg.speckle_rate > 0) {
        Rng rng = make_stream(spec.seed, "phantom.speckle");
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (std::size_t i = 0; i < n; ++i)
            if (u(rng) < deg.speckle_rate) pt[i] = std::max(pt[i], 0.7 + 0.3 * u(rng));
    }

    Phantom out;
    out.ct = Volume3D(g, volumes::ValueKind::HuFloat, std::move(ct));
    out.liver = std::move(liver);
    out.tumor = std::move(tumor);
    out.vessels = std::move(vessels);
    out.p_liver = to_probmap(g, blur(liver_f, dm, deg.blur_sigma_vox));
    out.p_tumor = to_probmap(g, pt);
    return out;
}

Volume3D perturb(const Volume3D& ct, double noise_sigma_hu, double intensity_scale, std::uint64_t seed) {
    if (ct.kind() != volumes::ValueKind::HuFloat) throw InvalidArgument("perturb: expects an HU volume");
    if (!(noise_sigma_hu >= 0.0 && noise_sigma_hu <= 10.0))
        throw InvalidArgument("perturb: noise sigma must lie in [0, 10] HU");
    if (!(intensity_scale >= 0.9 && intensity_scale <= 1.1))
        throw InvalidArgument("perturb: intensity scale must lie in [0.9, 1.1]");
    std::vector<float> v(ct.data().begin(), ct.data().end());
    Rng rng = make_stream(seed, "perturb");
    std::normal_distribution<double> nd(0.0, noise_sigma_hu > 0 ? noise_sigma_hu : 1.0);
    for (auto& x : v) {
        double y = intensity_scale * x;
        if (noise_sigma_hu > 0) y += nd(rng);
        x = static_cast<float>(y);
    }
    return Volume3D(ct.grid(), volumes::ValueKind::HuFloat, std::move(v));
}

PhantomSpec random_spec(std::uint64_t seed, const SuiteOptions& o) {
    if (o.min_lesions < 0 || o.max_lesions < o.min_lesions) throw InvalidArgument("phantom: bad lesion count range");
    if (!(o.min_radius_mm > 0) || o.max_radius_mm < o.min_radius_mm)
        throw InvalidArgument("phantom: bad lesion radius range");
    PhantomSpec s;
    s.seed = seed;
    s.noise_sigma_hu = o.noise_sigma_hu;
    s.degradation = o.degradation;
    Rng rng = make_stream(seed, "phantom.layout");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto& d = s.grid.dims;
    const auto& sp = s.grid.spacing;
    s.liver.center = {(d.nx - 1) * sp.sx / 2, (d.ny - 1) * sp.sy / 2, (d.nz - 1) * sp.sz / 2};
    s.liver.radii = {d.nx * sp.sx * (0.40 + 0.04 * u(rng)), d.ny * sp.sy * (0.33 + 0.04 * u(rng)),
                     d.nz * sp.sz * (0.38 + 0.04 * u(rng))};
    auto in_box = [&](double margin) {
        const auto& c = s.liver.center;
        const auto& r = s.liver.radii;
        return Point{c.x + (2 * u(rng) - 1) * (r.x - margin), c.y + (2 * u(rng) - 1) * (r.y - margin),
                     c.z + (2 * u(rng) - 1) * (r.z - margin)};
    };
    constexpr double kGap = 8.0;  // keeps boundary bands of neighbours apart
    const int count = o.min_lesions + static_cast<int>(u(rng) * (o.max_lesions - o.min_lesions + 1));
    for (int k = 0; k < std::min(count, o.max_lesions); ++k) {
        const double lr = std::log(o.min_radius_mm), hr = std::log(o.max_radius_mm);
        for (int attempt = 0; attempt < 500; ++attempt) {
            const double r = std::exp(lr + (hr - lr) * u(rng));
            const Point c = in_box(r + 2.0);
            if (!fits_in_liver(c, r, s.liver, 2.0)) continue;
            const bool clear = std::all_of(s.lesions.begin(), s.lesions.end(), [&](const Lesion& l) {
                return std::sqrt(dist2(c, l.center)) >= r + l.radius_mm + kGap;
            });
            if (!clear) continue;
            s.lesions.push_back({c, r, 40.0});
            break;
        }
    }
    for (int k = 0; k < o.vessels; ++k) {
        for (int attempt = 0; attempt < 500; ++attempt) {
            const double r = 1.5 + u(rng);
            const Point c = in_box(r + 4.0);
            const double half = 8.0 + 6.0 * u(rng);
            double dx = 2 * u(rng) - 1, dy = 2 * u(rng) - 1, dz = 2 * u(rng) - 1;
            const double len = std::sqrt(dx * dx + dy * dy + dz * dz);
            if (len < 1e-3) continue;
            dx *= half / len;
            dy *= half / len;
            dz *= half / len;
            const Vessel v{{c.x - dx, c.y - dy, c.z - dz}, {c.x + dx, c.y + dy, c.z + dz}, r, 150.0};
            if (!fits_in_liver(v.a, r, s.liver, 1.0) || !fits_in_liver(v.b, r, s.liver, 1.0)) continue;
            const bool clear = std::all_of(s.lesions.begin(), s.lesions.end(), [&](const Lesion& l) {
                return std::sqrt(segment_dist2(l.center, v.a, v.b)) >= l.radius_mm + r + kGap;
            });
            if (!clear) continue;
            s.vessels.push_back(v);
            break;
        }
    }
    s.validate();
    return s;
}

std::vector<PhantomSpec> phantom_suite(std::size_t n, std::uint64_t seed, const SuiteOptions& options) {
    std::vector<PhantomSpec> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(random_spec(stream_seed(seed, "phantom.suite", {i}), options));
    return out;
}

} // namespace livseg::phantom
