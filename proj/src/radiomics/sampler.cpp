#include "livseg/radiomics/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "livseg/core/rng.hpp"
#include "livseg/volumes/distance.hpp"

namespace livseg::radiomics {

std::vector<int> SamplerConfig::radii() const {
    std::vector<int> out;
    for (int r = r_min; r <= r_max; r += r_step) out.push_back(r);
    return out;
}

void SamplerConfig::validate() const {
    if (r_min < 1 || r_step < 1 || r_max < r_min) throw InvalidArgument("sampler: invalid radius grid");
    if (quota_total < 0) throw InvalidArgument("sampler: negative quota");
    if (max_retries < 1) throw InvalidArgument("sampler: max_retries must be positive");
    for (double f : {boundary_fraction, reject_outside_liver, reject_tumor_fraction})
        if (!(f >= 0.0 && f <= 1.0)) throw InvalidArgument("sampler: fractions must lie in [0, 1]");
}

std::vector<RadiusPlan> plan_quotas(const SamplerConfig& cfg) {
    cfg.validate();
    const auto radii = cfg.radii();
    const int n = static_cast<int>(radii.size());
    const int base = cfg.quota_total / n;
    const int extra = cfg.quota_total % n;
    std::vector<RadiusPlan> plan;
    int cumulative = 0;
    long prev_boundary = 0;
    for (int i = 0; i < n; ++i) {
        RadiusPlan p;
        p.radius = radii[i];
        p.quota = base + (i < extra ? 1 : 0);
        cumulative += p.quota;
        const long upto = std::lround(cfg.boundary_fraction * cumulative);
        p.boundary = static_cast<int>(upto - prev_boundary);
        prev_boundary = upto;
        plan.push_back(p);
    }
    return plan;
}

BallStats ball_stats(const Mask3D& liver, const Mask3D& tumor, volumes::Index3 c, int r) {
    const auto& g = liver.grid();
    BallStats s;
    const long r2 = static_cast<long>(r) * r;
    for (int dz = -r; dz <= r; ++dz)
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) {
                if (static_cast<long>(dx) * dx + static_cast<long>(dy) * dy + static_cast<long>(dz) * dz > r2) continue;
                ++s.total;
                const int x = c.x + dx, y = c.y + dy, z = c.z + dz;
                if (!g.contains(x, y, z)) {
                    ++s.outside;
                    continue;
                }
                const auto i = g.index(x, y, z);
                if (!liver.test(i)) ++s.outside;
                if (tumor.test(i)) ++s.tumor;
            }
    return s;
}

bool reject_ball(const BallStats& s, const SamplerConfig& cfg) {
    const double n = static_cast<double>(s.total);
    return static_cast<double>(s.outside) > cfg.reject_outside_liver * n ||
           static_cast<double>(s.tumor) > cfg.reject_tumor_fraction * n;
}

namespace {

std::size_t ball_volume(int r) {
    std::size_t n = 0;
    const long r2 = static_cast<long>(r) * r;
    for (long dz = -r; dz <= r; ++dz)
        for (long dy = -r; dy <= r; ++dy)
            for (long dx = -r; dx <= r; ++dx)
                if (dx * dx + dy * dy + dz * dz <= r2) ++n;
    return n;
}

std::vector<std::size_t> ball_voxels(const Grid& g, volumes::Index3 c, int r) {
    std::vector<std::size_t> out;
    const long r2 = static_cast<long>(r) * r;
    for (int dz = -r; dz <= r; ++dz)
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) {
                if (static_cast<long>(dx) * dx + static_cast<long>(dy) * dy + static_cast<long>(dz) * dz > r2) continue;
                const int x = c.x + dx, y = c.y + dy, z = c.z + dz;
                if (g.contains(x, y, z)) out.push_back(g.index(x, y, z));
            }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

SamplerResult sample_negative_regions(const Volume3D& ct, const Mask3D& liver, const Mask3D& tumor,
                                      const SamplerConfig& cfg) {
    volumes::require_same_grid(ct.grid(), liver.grid(), "sample_negative_regions(ct, liver)");
    volumes::require_same_grid(liver.grid(), tumor.grid(), "sample_negative_regions(liver, tumor)");
    if (liver.empty()) throw InvalidArgument("sample_negative_regions: liver mask is empty");
    const auto plan = plan_quotas(cfg);
    const Grid& g = liver.grid();

    // Liver voxels ordered by depth (deepest first); the interior pool for
    // radius r is the prefix with squared depth >= r^2.
    const auto sdf = volumes::signed_edt(liver);
    std::vector<std::size_t> by_depth;
    std::size_t liver_count = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (liver.test(i)) {
            by_depth.push_back(i);
            ++liver_count;
        }
    std::stable_sort(by_depth.begin(), by_depth.end(),
                     [&](std::size_t a, std::size_t b) { return sdf.signed_squared(a) < sdf.signed_squared(b); });

    SamplerResult out;
    for (const auto& p : plan) {
        if (p.quota == 0) continue;
        const std::int64_t r2 = static_cast<std::int64_t>(p.radius) * p.radius;
        const auto split = std::partition_point(by_depth.begin(), by_depth.end(),
                                                [&](std::size_t i) { return -sdf.signed_squared(i) >= r2; });
        const std::span<const std::size_t> interior(by_depth.data(), static_cast<std::size_t>(split - by_depth.begin()));
        const std::span<const std::size_t> boundary(by_depth.data() + interior.size(), by_depth.size() - interior.size());

        // A ball can never pass when the liver is too small to hold its
        // admissible share; skip the retries in that case.
        const double needed = (1.0 - cfg.reject_outside_liver) * static_cast<double>(ball_volume(p.radius));
        const bool hopeless = needed > static_cast<double>(liver_count);

        for (int slot = 0; slot < p.quota; ++slot) {
            const SeedKind kind = slot < p.boundary ? SeedKind::Boundary : SeedKind::Interior;
            const auto pool = kind == SeedKind::Boundary ? boundary : interior;
            if (pool.empty() || hopeless) {
                out.warnings.push_back({p.radius, slot,
                                        hopeless ? "liver too small for radius"
                                                 : (kind == SeedKind::Boundary ? "no boundary seed available"
                                                                               : "no interior seed available")});
                continue;
            }
            Rng rng = make_stream(cfg.seed, "sampler", {static_cast<std::uint64_t>(p.radius),
                                                        static_cast<std::uint64_t>(slot)});
            std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
            bool placed = false;
            for (int attempt = 1; attempt <= cfg.max_retries; ++attempt) {
                const std::size_t seed_voxel = pool[pick(rng)];
                const auto c = g.coords(seed_voxel);
                if (reject_ball(ball_stats(liver, tumor, c, p.radius), cfg)) continue;
                SampledRegion s;
                s.region = make_region(g, ball_voxels(g, c, p.radius), RegionSource::SampledNegative,
                                       RegionLabel::Negative);
                s.radius = p.radius;
                s.kind = kind;
                s.seed_voxel = seed_voxel;
                s.attempts = attempt;
                out.regions.push_back(std::move(s));
                placed = true;
                break;
            }
            if (!placed) out.warnings.push_back({p.radius, slot, "retries exhausted"});
        }
    }
    for (std::size_t i = 0; i < out.regions.size(); ++i) out.regions[i].region.id = static_cast<int>(i);
    return out;
}

} // namespace livseg::radiomics
