#include "doctest.h"

#include <cmath>
#include <numbers>
#include <algorithm>
#include <numeric>
#include <random>

#include "livseg/eval/metrics.hpp"

using namespace livseg;
using namespace livseg::eval;
using volumes::Grid;
using volumes::Mask3D;

namespace {

Mask3D line_mask(Grid g, std::size_t begin, std::size_t end) {
    Mask3D m(g);
    for (std::size_t i = begin; i < end; ++i) m.set(i, true);
    return m;
}

// Two-sided p from all 2^n sign patterns over the given doubled ranks.
double enumerate_p(const std::vector<double>& d) {
    std::vector<double> a;
    for (double v : d)
        if (v != 0.0) a.push_back(v);
    const std::size_t n = a.size();
    std::vector<double> rank(n);
    for (std::size_t i = 0; i < n; ++i) {
        double less = 0, equal = 0;
        for (std::size_t j = 0; j < n; ++j) {
            less += std::abs(a[j]) < std::abs(a[i]);
            equal += std::abs(a[j]) == std::abs(a[i]);
        }
        rank[i] = less + (equal + 1) / 2.0;
    }
    double w = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (a[i] > 0) w += rank[i];
    double lo = 0, hi = 0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        double s = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask >> i & 1) s += rank[i];
        lo += s <= w;
        hi += s >= w;
    }
    return std::min(1.0, 2.0 * std::min(lo, hi) / std::ldexp(1.0, static_cast<int>(n)));
}

} // namespace

TEST_CASE("overlap metrics on the basic cases") {
    Grid g{{10, 10, 3}, {}};
    const auto a = line_mask(g, 0, 100);
    auto m = compute_metrics(a, a);
    CHECK(m.dice == 1.0);
    CHECK(m.sensitivity == 1.0);
    CHECK(m.ppv == 1.0);

    m = compute_metrics(line_mask(g, 0, 100), line_mask(g, 100, 200));
    CHECK(m.dice == 0.0);
    CHECK(m.sensitivity == 0.0);
    CHECK(m.ppv == 0.0);

    m = compute_metrics(line_mask(g, 0, 100), line_mask(g, 50, 150));
    CHECK(m.dice == 0.5);
    CHECK(m.sensitivity == 0.5);
    CHECK(m.ppv == 0.5);
    CHECK(m.intersection == 50);

    CHECK_THROWS_AS(compute_metrics(Mask3D(g), Mask3D(Grid{{10, 10, 2}, {}})), GridMismatchError);
}

TEST_CASE("empty-set conventions") {
    Grid g{{4, 4, 4}, {}};
    const Mask3D empty(g);
    const auto some = line_mask(g, 3, 9);
    auto m = compute_metrics(empty, empty);
    CHECK(m.sensitivity == 1.0);
    CHECK(m.ppv == 1.0);
    CHECK(m.dice == 1.0);
    CHECK_FALSE(m.sensitivity_defined);
    m = compute_metrics(some, empty);
    CHECK(m.sensitivity == 0.0);
    CHECK(m.ppv == 0.0);
    CHECK(m.dice == 0.0);
    m = compute_metrics(empty, some);
    CHECK(m.sensitivity == 0.0);
    CHECK(m.ppv == 0.0);
    CHECK_FALSE(m.ppv_defined);
}

TEST_CASE("metric dualities and permutation invariance") {
    std::mt19937_64 rng(1);
    Grid g{{8, 8, 8}, {}};
    std::bernoulli_distribution coin(0.3);
    for (int t = 0; t < 100; ++t) {
        Mask3D p(g), q(g);
        for (std::size_t i = 0; i < g.size(); ++i) {
            p.set(i, coin(rng));
            q.set(i, coin(rng));
        }
        const auto pq = compute_metrics(p, q), qp = compute_metrics(q, p);
        CHECK(pq.dice == qp.dice);
        CHECK(pq.sensitivity == qp.ppv);
        std::vector<std::size_t> perm(g.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Mask3D pp(g), qq(g);
        for (std::size_t i = 0; i < g.size(); ++i) {
            pp.set(perm[i], p.test(i));
            qq.set(perm[i], q.test(i));
        }
        CHECK(compute_metrics(pp, qq).dice == pq.dice);
    }
}

TEST_CASE("report aggregates with sample standard deviation") {
    Grid g{{10, 10, 2}, {}};
    const auto r = MetricsReport::from_cases({compute_metrics(line_mask(g, 0, 100), line_mask(g, 0, 100), "a"),
                                              compute_metrics(line_mask(g, 0, 100), line_mask(g, 50, 150), "b")});
    CHECK(r.dice.mean == 0.75);
    CHECK(r.dice.std == doctest::Approx(std::sqrt(0.125)));
    const auto csv = r.to_csv();
    CHECK(csv.find("b,0.5,0.5,0.5,50,100,100") != std::string::npos);
    CHECK(csv.find("mean,0.75") != std::string::npos);
    CHECK(r.to_json().find("\"summary\"") != std::string::npos);
}

TEST_CASE("size strata by equivalent spherical diameter") {
    CHECK(equivalent_diameter(std::numbers::pi * 1000.0 / 6.0) == doctest::Approx(10.0));
    CHECK(classify_diameter(equivalent_diameter(std::numbers::pi * 1000.0 / 6.0)) == SizeStratum::Medium);
    CHECK(classify_diameter(equivalent_diameter(std::numbers::pi * 27000.0 / 6.0)) == SizeStratum::Medium);
    CHECK(classify_diameter(30.0) == SizeStratum::Medium);
    CHECK(classify_diameter(9.99) == SizeStratum::Small);
    CHECK(classify_diameter(30.01) == SizeStratum::Large);

    Grid g{{20, 20, 20}, {1.0, 1.0, 1.0}};
    Mask3D m(g);
    m.set(1, 1, 1, true);
    for (int z = 5; z < 19; ++z)
        for (int y = 5; y < 19; ++y)
            for (int x = 5; x < 19; ++x) m.set(x, y, z, true);
    const auto s = stratify_by_size(volumes::connected_components(m, volumes::Connectivity::TwentySix), g.spacing);
    REQUIRE(s.size() == 2);
    CHECK(s[0].voxels == 1);
    CHECK(s[0].stratum == SizeStratum::Small);
    CHECK(s[1].stratum == SizeStratum::Medium);  // 14^3 mm^3 -> about 17.4 mm
    const auto big = stratify_by_size(volumes::connected_components(m, volumes::Connectivity::TwentySix),
                                      volumes::Spacing{3.0, 3.0, 3.0});
    CHECK(big[1].stratum == SizeStratum::Large);
}

TEST_CASE("Wilcoxon exact values") {
    const auto r = wilcoxon_signed_rank({1, 2, 3, 4, 5, 6});
    CHECK(r.exact);
    CHECK(r.p_value == 0.03125);
    CHECK(r.w_plus == 21);
    CHECK(r.statistic == 0);

    const auto sym = wilcoxon_signed_rank({1, -1, 2, -2, 3, -3, 4, -4});
    CHECK(sym.w_plus == sym.w_minus);
    CHECK(sym.p_value == 1.0);

    CHECK(wilcoxon_signed_rank({0, 0, 1, 2, 3, 4, 5, 6}).n == 6);
    CHECK_THROWS_AS(wilcoxon_signed_rank({1, 2, 0, 3, 4}), InvalidArgument);
    CHECK_THROWS_AS(wilcoxon_paired({1, 2}, {1}), InvalidArgument);
}

TEST_CASE("Wilcoxon exact p equals sign enumeration up to n = 12") {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> mag(1, 6);
    std::bernoulli_distribution sign(0.5);
    for (int n = 5; n <= 12; ++n)
        for (int t = 0; t < 30; ++t) {
            std::vector<double> d(n);
            for (double& v : d) v = (sign(rng) ? 1 : -1) * (t % 2 ? mag(rng) : mag(rng) + 0.1 * mag(rng));
            CHECK(wilcoxon_signed_rank(d).p_value == enumerate_p(d));
        }
}

TEST_CASE("Wilcoxon normal approximation beyond the exact range") {
    std::vector<double> d(40);
    for (int i = 0; i < 40; ++i) d[i] = i + 1;
    const auto r = wilcoxon_signed_rank(d);
    CHECK_FALSE(r.exact);
    CHECK(r.p_value < 1e-6);
    std::vector<double> s;
    for (int i = 1; i <= 15; ++i) {
        s.push_back(i);
        s.push_back(-i);
    }
    CHECK(wilcoxon_signed_rank(s).p_value == 1.0);
}
