#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "livseg/radiomics/features.hpp"
#include "livseg/radiomics/sampler.hpp"
#include "livseg/radiomics/wavelet.hpp"
#include "livseg/volumes/components.hpp"
#include "livseg/volumes/distance.hpp"
#include "support/transforms.hpp"

using namespace livseg;
using namespace livseg::radiomics;
using volumes::Grid;
using volumes::Index3;
using volumes::ValueKind;

namespace {

Grid grid(int nx, int ny, int nz, volumes::Spacing s = {}) { return Grid{{nx, ny, nz}, s}; }

Volume3D constant_volume(Grid g, float v, ValueKind kind = ValueKind::Normalized8) {
    return Volume3D(g, kind, std::vector<float>(g.size(), v));
}

CandidateRegion ball_region(Grid g, Index3 c, double r) {
    std::vector<std::size_t> vox;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto p = g.coords(i);
        const double d2 = (p.x - c.x) * (p.x - c.x) + (p.y - c.y) * (p.y - c.y) + (p.z - c.z) * (p.z - c.z);
        if (d2 <= r * r) vox.push_back(i);
    }
    return make_region(g, std::move(vox), RegionSource::Candidate, RegionLabel::Unknown);
}

CandidateRegion box_region(Grid g, Index3 lo, Index3 hi) {
    std::vector<std::size_t> vox;
    for (int z = lo.z; z <= hi.z; ++z)
        for (int y = lo.y; y <= hi.y; ++y)
            for (int x = lo.x; x <= hi.x; ++x) vox.push_back(g.index(x, y, z));
    return make_region(g, std::move(vox), RegionSource::Candidate, RegionLabel::Unknown);
}

Mask3D ellipsoid(Grid g, double ax, double ay, double az) {
    Mask3D m(g);
    const double cx = (g.dims.nx - 1) / 2.0, cy = (g.dims.ny - 1) / 2.0, cz = (g.dims.nz - 1) / 2.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto p = g.coords(i);
        const double u = (p.x - cx) / ax, v = (p.y - cy) / ay, w = (p.z - cz) / az;
        m.set(i, u * u + v * v + w * w <= 1.0);
    }
    return m;
}

double glcm_correlation_direct(const RegionField& f) {
    const auto q = quantize(f, 128);
    std::map<std::pair<int, int>, double> counts;
    double total = 0;
    for (auto i : f.roi) {
        const auto p = f.grid.coords(i);
        for (const auto& d : unique_directions()) {
            if (!f.in_roi(p.x + d.x, p.y + d.y, p.z + d.z)) continue;
            const int a = q[i] + 1, b = q[f.grid.index(p.x + d.x, p.y + d.y, p.z + d.z)] + 1;
            counts[{a, b}] += 1;
            counts[{b, a}] += 1;
            total += 2;
        }
    }
    double mx = 0, sxx = 0, sxy = 0;
    for (auto& [k, c] : counts) mx += k.first * c / total;
    for (auto& [k, c] : counts) {
        sxx += (k.first - mx) * (k.first - mx) * c / total;
        sxy += (k.first - mx) * (k.second - mx) * c / total;
    }
    return sxx > 0 ? sxy / sxx : 1.0;
}

} // namespace

TEST_CASE("positive regions follow 26-connected components") {
    const Grid g = grid(20, 20, 20);
    CHECK(extract_positive_regions(Mask3D(g)).empty());

    Mask3D m(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto p = g.coords(i);
        const int a = (p.x - 5) * (p.x - 5) + (p.y - 5) * (p.y - 5) + (p.z - 5) * (p.z - 5);
        const int b = (p.x - 14) * (p.x - 14) + (p.y - 13) * (p.y - 13) + (p.z - 14) * (p.z - 14);
        m.set(i, a <= 9 || b <= 16);
    }
    const auto regions = extract_positive_regions(m);
    REQUIRE(regions.size() == 2);
    const auto lab = volumes::connected_components(m, volumes::Connectivity::TwentySix);
    for (std::size_t k = 0; k < regions.size(); ++k) {
        CHECK(regions[k].label == RegionLabel::Positive);
        CHECK(regions[k].size() == lab.components[k].size);
        CHECK(regions[k].voxels == lab.components[k].voxels);
    }
}

TEST_CASE("sampler quota plan") {
    SamplerConfig cfg;
    CHECK(cfg.radii().size() == 24);
    cfg.quota_total = 48;
    const auto plan = plan_quotas(cfg);
    int b = 0, in = 0;
    for (const auto& p : plan) {
        CHECK(p.quota == 2);
        b += p.boundary;
        in += p.interior();
    }
    CHECK(b == 29);
    CHECK(in == 19);

    cfg.quota_total = 1000; // 41 each, the first 16 radii get one more
    const auto big = plan_quotas(cfg);
    CHECK(big.front().quota == 42);
    CHECK(big[15].quota == 42);
    CHECK(big[16].quota == 41);
    int total = 0;
    for (const auto& p : big) total += p.quota;
    CHECK(total == 1000);
}

TEST_CASE("sampler fills every slot on a large tumor-free ellipsoid") {
    const Grid g = grid(150, 146, 140);
    const Mask3D liver = ellipsoid(g, 72, 70, 67);
    const Mask3D tumor(g);
    const Volume3D ct = constant_volume(g, 100);
    SamplerConfig cfg;
    cfg.quota_total = 48;
    cfg.seed = 77;
    const auto res = sample_negative_regions(ct, liver, tumor, cfg);
    CHECK(res.warnings.empty());
    REQUIRE(res.regions.size() == 48);
    std::map<int, int> per_radius;
    int boundary = 0, interior = 0;
    const auto sdf = volumes::signed_edt(liver);
    for (const auto& s : res.regions) {
        ++per_radius[s.radius];
        const auto depth2 = -sdf.signed_squared(s.seed_voxel);
        if (s.kind == SeedKind::Boundary) {
            ++boundary;
            CHECK(depth2 < static_cast<std::int64_t>(s.radius) * s.radius);
        } else {
            ++interior;
            CHECK(depth2 >= static_cast<std::int64_t>(s.radius) * s.radius);
        }
        const auto st = ball_stats(liver, tumor, g.coords(s.seed_voxel), s.radius);
        CHECK_FALSE(reject_ball(st, cfg));
        CHECK(s.region.label == RegionLabel::Negative);
    }
    CHECK(per_radius.size() == 24);
    for (auto [r, n] : per_radius) CHECK(n == 2);
    CHECK(boundary == 29);
    CHECK(interior == 19);

    const auto again = sample_negative_regions(ct, liver, tumor, cfg);
    REQUIRE(again.regions.size() == res.regions.size());
    for (std::size_t i = 0; i < res.regions.size(); ++i) CHECK(again.regions[i].region.voxels == res.regions[i].region.voxels);
}

TEST_CASE("sampler rejection thresholds") {
    // Liver is the half space z <= 10; a radius-4 ball centred one voxel
    // inside the edge has 59 of its 257 voxels outside.
    const Grid g = grid(21, 21, 21);
    Mask3D liver(g), tumor(g);
    for (std::size_t i = 0; i < g.size(); ++i) liver.set(i, g.coords(i).z <= 10);
    const auto st = ball_stats(liver, tumor, {10, 10, 9}, 4);
    CHECK(st.total == 257);
    CHECK(st.outside == 59);
    SamplerConfig cfg;
    CHECK(reject_ball(st, cfg));
    CHECK_FALSE(reject_ball(ball_stats(liver, tumor, {10, 10, 6}, 4), cfg));

    // Tumor share above 10% rejects as well.
    for (int x = 8; x <= 12; ++x)
        for (int y = 8; y <= 12; ++y) {
            tumor.set(x, y, 5, true);
            tumor.set(x, y, 6, true);
        }
    CHECK(reject_ball(ball_stats(liver, tumor, {10, 10, 5}, 4), cfg));
}

TEST_CASE("sampler warns instead of failing on a tiny liver") {
    const Grid g = grid(30, 30, 30);
    const Mask3D liver = ellipsoid(g, 5, 5, 5);
    const auto res = sample_negative_regions(constant_volume(g, 0), liver, Mask3D(g), SamplerConfig{});
    CHECK_FALSE(res.warnings.empty());
    CHECK(res.regions.size() < 1000);
    for (const auto& s : res.regions) CHECK(s.radius <= 4);
    CHECK_THROWS_AS(sample_negative_regions(constant_volume(g, 0), Mask3D(g), Mask3D(g), SamplerConfig{}),
                    InvalidArgument);
}

TEST_CASE("first-order features") {
    SUBCASE("constant region") {
        const auto f = first_order_features(std::vector<double>(50, 100.0), Quantization::Fixed, 1.0);
        CHECK(f[3] == 100.0);
        CHECK(f[6] == 0.0);
        CHECK(f[10] == 0.0);
        CHECK(f[11] == 0.0);
        CHECK(f[14] == 0.0);
        CHECK(f[15] == 1.0);
        CHECK(f[27] == 0.0);
    }
    SUBCASE("two-point distribution") {
        std::vector<double> v(40, 0.0);
        std::fill(v.begin() + 20, v.end(), 255.0);
        const auto f = first_order_features(v, Quantization::Fixed, 2.0);
        CHECK(f[3] == 127.5);
        CHECK(f[6] == doctest::Approx(127.5));
        CHECK(f[27] == doctest::Approx(1.0));
        CHECK(f[14] == doctest::Approx(1.0));
        CHECK(f[13] == doctest::Approx(2.0 * 20 * 255.0 * 255.0));
        CHECK(f[30] == 2.0);
    }
    SUBCASE("permutation invariance") {
        std::mt19937_64 rng(5);
        std::uniform_int_distribution<int> u(0, 255);
        std::vector<double> v(333);
        for (auto& x : v) x = u(rng);
        const auto a = first_order_features(v, Quantization::Fixed, 1.0);
        std::shuffle(v.begin(), v.end(), rng);
        CHECK(first_order_features(v, Quantization::Fixed, 1.0) == a);
    }
}

TEST_CASE("gradient features") {
    const Grid g = grid(32, 24, 24, {0.8, 1.0, 1.5});
    const auto region = box_region(g, {10, 8, 8}, {20, 15, 15});
    const auto c = gradient_features(region, constant_volume(g, 42, ValueKind::HuFloat));
    CHECK(c[0] == 0.0);
    CHECK(c[1] == 0.0);

    std::vector<float> ramp(g.size()), ramp2(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        ramp[i] = 3.0f * static_cast<float>(g.coords(i).x);
        ramp2[i] = 2.0f * ramp[i];
    }
    const auto a = gradient_features(region, Volume3D(g, ValueKind::HuFloat, ramp));
    CHECK(a[0] == doctest::Approx(3.0 / 0.8).epsilon(1e-9));
    CHECK(std::abs(a[1]) < 1e-6);
    const auto b = gradient_features(region, Volume3D(g, ValueKind::HuFloat, ramp2));
    CHECK(b[0] == 2.0 * a[0]);
}

TEST_CASE("run-length features") {
    const int n = 9;
    const Grid g = grid(1, n, 1);
    const auto line = box_region(g, {0, 0, 0}, {0, n - 1, 0});
    const auto f = make_region_field(line, constant_volume(g, 77), 0);
    const Index3 dir[] = {{0, 1, 0}};
    const auto one = rlm_features(f, dir);
    CHECK(one[0] == doctest::Approx(1.0 / (n * n)));
    CHECK(one[1] == doctest::Approx(n * n));
    CHECK(one[4] == doctest::Approx(1.0 / n));

    std::vector<float> alt(n);
    for (int i = 0; i < n; ++i) alt[i] = i % 2 ? 200.f : 10.f;
    const auto checker = rlm_features(make_region_field(line, Volume3D(g, ValueKind::Normalized8, alt), 0));
    CHECK(checker[0] == 1.0);
    CHECK(checker[1] == 1.0);
    CHECK(checker[4] == 1.0);
}

TEST_CASE("texture features are invariant under axis permutations") {
    std::mt19937_64 rng(12);
    const std::array<std::array<int, 3>, 5> perms{{{1, 0, 2}, {2, 1, 0}, {0, 2, 1}, {1, 2, 0}, {2, 0, 1}}};
    for (int t = 0; t < 10; ++t) {
        auto [vol, region] = testing::random_case(rng, grid(9, 10, 11), t % 2 ? 4 : 256);
        const auto rl = rlm_features(region, vol);
        const auto gl = glcm_features(region, vol);
        const auto fo = first_order_features(region, vol);
        for (const auto& p : perms) {
            const auto pv = testing::permute(vol, p);
            const auto pr = testing::permute(region, p);
            CHECK(rlm_features(pr, pv) == rl);
            CHECK(glcm_features(pr, pv) == gl);
            CHECK(first_order_features(pr, pv) == fo);
        }
    }
}

TEST_CASE("GLCM conventions and correlation oracle") {
    const Grid g = grid(8, 8, 8);
    const auto region = box_region(g, {1, 1, 1}, {6, 6, 6});
    const auto c = glcm_features(region, constant_volume(g, 90));
    CHECK(c[2] == 1.0);
    CHECK(c[3] == 0.0);
    CHECK(c[0] == 0.0);

    std::mt19937_64 rng(3);
    for (int t = 0; t < 500; ++t) {
        auto [vol, r] = testing::random_case(rng, grid(7, 7, 7), t % 3 ? 8 : 256);
        const auto f = make_region_field(r, vol, 0);
        const double corr = glcm_features(f)[1];
        CHECK(corr >= -1.0);
        CHECK(corr <= 1.0);
        CHECK(corr == doctest::Approx(std::clamp(glcm_correlation_direct(f), -1.0, 1.0)).epsilon(1e-9));
    }
}

TEST_CASE("shape features") {
    const Grid g = grid(5, 5, 5);
    const auto one = shape_features(make_region(g, {g.index(2, 2, 2)}, RegionSource::Candidate, RegionLabel::Unknown));
    CHECK(one[0] == 1.0);
    CHECK(one[1] == 6.0);
    CHECK(one[2] == doctest::Approx(std::cbrt(std::numbers::pi) * std::pow(6.0, 2.0 / 3.0) / 6.0));
    CHECK(one[2] == doctest::Approx(0.806).epsilon(1e-3));
    CHECK(one[7] == 0.0);

    // Exposed-face area of a digitized sphere approaches 3/2 of the true
    // area (mean of |nx|+|ny|+|nz| over the sphere), so the face-count
    // sphericity of a ball tends to 2/3.
    const Grid bg = grid(21, 21, 21);
    const auto ball = ball_region(bg, {10, 10, 10}, 8.0);
    const auto s = shape_features(ball);
    CHECK(s[2] == doctest::Approx(2.0 / 3.0).epsilon(0.03));
    CHECK(s[5] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s[6] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s[7] == doctest::Approx(16.0));

    const Grid bg2 = grid(21, 21, 21, {2, 2, 2});
    auto scaled = ball;
    scaled.grid = bg2;
    const auto s2 = shape_features(scaled);
    CHECK(s2[0] == 8.0 * s[0]);
    CHECK(s2[1] == 4.0 * s[1]);
    CHECK(std::abs(s2[2] - s[2]) < 1e-12);
    CHECK(s2[7] == 2.0 * s[7]);

    // Diameter from the extreme-voxel subset agrees with all pairs.
    std::mt19937_64 rng(8);
    for (int t = 0; t < 30; ++t) {
        auto [vol, r] = testing::random_case(rng, grid(9, 9, 9, {0.7, 1.1, 1.9}));
        double best = 0;
        for (auto a : r.voxels)
            for (auto b : r.voxels) {
                const auto p = r.grid.coords(a), q = r.grid.coords(b);
                const double dx = (p.x - q.x) * 0.7, dy = (p.y - q.y) * 1.1, dz = (p.z - q.z) * 1.9;
                best = std::max(best, dx * dx + dy * dy + dz * dz);
            }
        CHECK(shape_features(r)[7] == doctest::Approx(std::sqrt(best)).epsilon(1e-12));
    }
}

TEST_CASE("moment invariants") {
    const Grid g = grid(21, 21, 21);
    const auto single = make_region(g, {g.index(4, 5, 6)}, RegionSource::Candidate, RegionLabel::Unknown);
    CHECK(moment_invariants(single, constant_volume(g, 50)) == Moments{0, 0, 0});

    const auto ball = ball_region(g, {10, 10, 10}, 6.0);
    const auto j = moment_invariants(ball, constant_volume(g, 50));
    const double m = j[0] / 3.0;
    CHECK(j[1] == doctest::Approx(3 * m * m).epsilon(1e-12));
    CHECK(j[2] == doctest::Approx(m * m * m).epsilon(1e-12));
    // Zero intensity falls back to uniform weights.
    CHECK(moment_invariants(ball, constant_volume(g, 0)) == j);

    std::mt19937_64 rng(4);
    for (int t = 0; t < 20; ++t) {
        auto [vol, r] = testing::random_case(rng, grid(9, 11, 8, {0.6, 0.9, 2.0}));
        const auto a = moment_invariants(r, vol);
        const auto b = moment_invariants(testing::rotate(r), testing::rotate(vol));
        for (int k = 0; k < 3; ++k) CHECK(std::abs(a[k] - b[k]) <= 1e-9 * std::max(1.0, std::abs(a[k])));
    }
}

TEST_CASE("boundary band") {
    const Grid g = grid(15, 15, 15);
    const auto single = make_region(g, {g.index(7, 7, 7)}, RegionSource::Candidate, RegionLabel::Unknown);
    const auto b1 = boundary_band(single, 2.0);
    CHECK_FALSE(b1.fell_back);
    CHECK(b1.band.voxels == ball_region(g, {7, 7, 7}, 2.0).voxels);

    const auto cube = box_region(g, {3, 3, 3}, {11, 11, 11});
    const auto band = boundary_band(cube, 2.0).band;
    Mask3D bm = band.to_mask();
    for (int z = 3; z <= 11; ++z)
        for (int y = 3; y <= 11; ++y)
            for (int x = 3; x <= 11; ++x) {
                const int depth = std::min({x - 3, 11 - x, y - 3, 11 - y, z - 3, 11 - z});
                CHECK(bm.test(x, y, z) == (depth <= 2));
            }

    // Containment in the width-2 dilation (Euclidean).
    std::mt19937_64 rng(6);
    for (int t = 0; t < 10; ++t) {
        auto [vol, r] = testing::random_case(rng, grid(12, 12, 12));
        const auto b = boundary_band(r, 2.0).band;
        for (auto v : b.voxels) {
            const auto q = r.grid.coords(v);
            bool near = false;
            for (auto u : r.voxels) {
                const auto s = r.grid.coords(u);
                const int d2 = (s.x - q.x) * (s.x - q.x) + (s.y - q.y) * (s.y - q.y) + (s.z - q.z) * (s.z - q.z);
                if (d2 <= 4) near = true;
            }
            CHECK(near);
        }
    }
}

TEST_CASE("Haar wavelet") {
    const Grid g = grid(6, 4, 8);
    const RealField c(g, std::vector<double>(g.size(), 3.0));
    const auto bands = haar_analysis(c);
    for (int b = 0; b < 8; ++b)
        for (double v : bands[b].data()) {
            if (b == 0)
                CHECK(v == doctest::Approx(3.0 * std::pow(2.0, 1.5)));
            else
                CHECK(std::abs(v) < 1e-12);
        }
    CHECK(bands[0].spacing() == volumes::Spacing{2, 2, 2});

    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0, 50);
    for (int t = 0; t < 20; ++t) {
        const Grid eg = grid(2 * (1 + t % 5), 2 * (1 + t % 3), 2 * (2 + t % 4), {0.5, 0.7, 2.5});
        std::vector<double> v(eg.size());
        for (auto& x : v) x = n(rng);
        const RealField f(eg, v);
        const auto b = haar_analysis(f);
        const auto back = haar_synthesis(b);
        REQUIRE(back.dims() == eg.dims);
        CHECK(back.spacing() == eg.spacing);
        double err = 0, e_in = 0, e_out = 0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            err = std::max(err, std::abs(back[i] - v[i]));
            e_in += v[i] * v[i];
        }
        for (const auto& band : b)
            for (double x : band.data()) e_out += x * x;
        CHECK(err < 1e-9);
        CHECK(std::abs(e_out - e_in) < 1e-6 * e_in);
    }

    // Odd dimensions are padded by repeating the last sample.
    const RealField odd(grid(3, 1, 1), {1.0, 2.0, 5.0});
    const auto ob = haar_analysis(odd);
    CHECK(ob[0].dims() == volumes::Dims{2, 1, 1});
    CHECK(ob[6].at(1, 0, 0) == doctest::Approx(0.0)); // high pass of (5, 5) along x
}

TEST_CASE("feature manifest") {
    const auto& m = FeatureManifest::standard();
    CHECK(m.size() == 728);
    CHECK(m.count(FeatureGroup::FirstOrder, "core") == 34);
    CHECK(m.count(FeatureGroup::Gradient, "core") == 2);
    CHECK(m.count(FeatureGroup::RunLength, "core") == 11);
    CHECK(m.count(FeatureGroup::Glcm, "core") == 22);
    CHECK(m.count(FeatureGroup::Shape, "core") == 8);
    CHECK(m.count(FeatureGroup::Moments, "core") == 3);
    CHECK(m.count(FeatureGroup::Shape, "band") == 0);
    auto names = m.names();
    std::sort(names.begin(), names.end());
    CHECK(std::adjacent_find(names.begin(), names.end()) == names.end());
    CHECK(m[0].name == "core.first_order.min");
    CHECK(m[80].name == "band.first_order.min");
    CHECK(m[152].name == "wavelet_LLL.first_order.min");
    CHECK(m[727].name == "wavelet_HHH.moments.j3");
    CHECK(FeatureManifest::from_json(m.to_json()) == m);
    CHECK_THROWS_AS(FeatureManifest::from_json("{\"format\":\"x\"}"), FormatError);
}

TEST_CASE("extract_features contract") {
    std::mt19937_64 rng(21);
    for (int t = 0; t < 5; ++t) {
        auto [vol, r] = testing::random_case(rng, grid(14, 13, 12, {0.8, 0.8, 2.0}));
        const auto a = extract_features(r, vol);
        CHECK(a.values.size() == 728);
        for (double v : a.values) CHECK(std::isfinite(v));
        CHECK(extract_features(r, vol).values == a.values);
    }
    // Single voxel at a corner and a line region still produce finite vectors.
    const Grid g = grid(5, 5, 5);
    const Volume3D hu(g, ValueKind::HuFloat, std::vector<float>(g.size(), -20.f));
    for (const auto& r : {make_region(g, {0}, RegionSource::Candidate, RegionLabel::Unknown), box_region(g, {0, 2, 4}, {4, 2, 4})}) {
        const auto f = extract_features(r, hu);
        CHECK(f.values.size() == 728);
        for (double v : f.values) CHECK(std::isfinite(v));
    }
}

TEST_CASE("constant ball has zero entropy and spread features") {
    const Grid g = grid(24, 24, 24);
    const auto ball = ball_region(g, {12, 12, 12}, 6.0);
    const auto f = extract_features(ball, constant_volume(g, 130));
    const auto& m = FeatureManifest::standard();
    int checked = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const auto& name = m[i].feature;
        if (name.find("entropy") != std::string::npos || name == "std" || name == "variance") {
            CHECK_MESSAGE(f.values[i] == 0.0, m[i].name);
            ++checked;
        }
    }
    CHECK(checked == 80); // 8 per block, 10 blocks
}

TEST_CASE("feature CSV round trip") {
    std::mt19937_64 rng(1);
    auto [vol, r] = testing::random_case(rng, grid(10, 10, 10));
    std::vector<FeatureVector> rows{extract_features(r, vol)};
    rows[0].region_id = 17;
    rows.push_back(rows[0]);
    rows[1].region_id = 18;
    rows[1].values[3] = 0.1 + 0.2;
    const auto& m = FeatureManifest::standard();
    const auto csv = features_to_csv(m, rows);
    const auto back = features_from_csv(m, csv);
    REQUIRE(back.size() == 2);
    CHECK(back[0].region_id == 17);
    CHECK(back[0].values == rows[0].values);
    CHECK(back[1].values == rows[1].values);
    CHECK_THROWS_AS(features_from_csv(m, "id,a\n1,2\n"), FormatError);
}
