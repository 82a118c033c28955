#include "doctest.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "livseg/featsel/featsel.hpp"
#include "support/brute_force.hpp"
#include "support/synthetic.hpp"

using namespace livseg;
using namespace livseg::featsel;

namespace {

Matrix columns(std::initializer_list<std::vector<double>> cols) {
    const std::size_t n = cols.begin()->size();
    Matrix m(n, cols.size());
    std::size_t c = 0;
    for (const auto& col : cols) {
        for (std::size_t r = 0; r < n; ++r) m(r, c) = col[r];
        ++c;
    }
    return m;
}

} // namespace

TEST_CASE("standardization") {
    const Matrix x = columns({{1.0, 3.0}, {5.0, 5.0}});
    const auto s = fit_apply_standardize(x);
    CHECK(s.train(0, 0) == -1.0);
    CHECK(s.train(1, 0) == 1.0);
    CHECK(s.train(0, 1) == 0.0);
    CHECK(s.params.std[1] == kStdFloor);
    CHECK_THROWS_AS(fit_standardize(Matrix(1, 3)), InvalidArgument);

    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(3.0, 7.0);
    Matrix a(50, 4), test(10, 4);
    for (auto& v : a.data()) v = g(rng);
    for (auto& v : test.data()) v = g(rng);
    std::vector<Matrix> others{test};
    const auto st = fit_apply_standardize(a, others);
    for (std::size_t c = 0; c < 4; ++c) {
        double m = 0, v = 0;
        for (std::size_t r = 0; r < 50; ++r) m += st.train(r, c);
        m /= 50;
        for (std::size_t r = 0; r < 50; ++r) v += (st.train(r, c) - m) * (st.train(r, c) - m);
        CHECK(std::abs(m) < 1e-9);
        CHECK(std::abs(std::sqrt(v / 50) - 1.0) < 1e-9);
    }
    // Contaminating the held-out rows never changes the fitted params.
    Matrix dirty = test;
    for (auto& v : dirty.data()) v = 1e6;
    std::vector<Matrix> dirty_others{dirty};
    CHECK(fit_apply_standardize(a, dirty_others).params.mean == st.params.mean);
    // Re-standardizing is the identity.
    const auto again = fit_apply_standardize(st.train);
    for (std::size_t i = 0; i < again.train.data().size(); ++i)
        CHECK(std::abs(again.train.data()[i] - st.train.data()[i]) < 1e-9);
}

TEST_CASE("near-zero variance filter") {
    // Variance of {0, 2e-4} is exactly 1e-8 in double arithmetic terms of the
    // boundary: it is kept because the rule is strict.
    const double eps = 1e-8;
    const double h = std::sqrt(eps);
    const Matrix x = columns({{4, 4, 4, 4}, {0, 1, 0, 1}, {-h, h, -h, h}, {0, 0, 0, 1e-5}});
    const auto keep = drop_near_zero_variance(x, eps);
    // Column 2 has population variance h^2 = eps (up to rounding); check it
    // against the computed value rather than assuming.
    double v = 0;
    for (double s : {-h, h, -h, h}) v += s * s;
    v /= 4;
    std::vector<std::size_t> expect{1};
    if (!(v < eps)) expect.push_back(2);
    CHECK(keep == expect);

    const Matrix exact = columns({{0.0, 0.0}, {0.0, 0.5}});
    CHECK(drop_near_zero_variance(exact, 0.0625) == std::vector<std::size_t>{1});
    CHECK(drop_near_zero_variance(exact, 0.0625 + 1e-12).empty());
}

TEST_CASE("distance correlation equals the definition") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    std::uniform_int_distribution<int> small(0, 4);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 3 + t % 120;
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = t % 3 == 0 ? small(rng) : g(rng) * 10 + 4;
            b[i] = t % 4 == 0 ? small(rng) : (t % 2 ? a[i] * a[i] + g(rng) : g(rng));
        }
        CHECK(std::abs(distance_correlation(a, b) - testing::brute_force_dcor(a, b)) < 1e-12);
    }
    std::vector<double> c(300), d(300);
    for (std::size_t i = 0; i < 300; ++i) {
        c[i] = g(rng);
        d[i] = g(rng);
    }
    CHECK(std::abs(distance_correlation(c, d) - testing::brute_force_dcor(c, d)) < 1e-12);
    CHECK(distance_correlation(c, c) == doctest::Approx(1.0));
    CHECK(distance_correlation(c, std::vector<double>(300, 2.0)) == 0.0);
}

TEST_CASE("correlation filter") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    std::vector<double> a(200), b(200), lin(101), pw(101), sym(101), sq(101);
    for (auto& v : a) v = g(rng);
    for (auto& v : b) v = g(rng);
    const Matrix dup = columns({a, b, a});
    CHECK(drop_correlated(dup) == std::vector<std::size_t>{0, 1});
    CHECK(drop_correlated(columns({a, b})) == std::vector<std::size_t>{0, 1});

    // A monotone power curve: Pearson below 0.95 but dCor above it.
    for (int i = 0; i <= 100; ++i) {
        lin[i] = i / 100.0;
        pw[i] = std::pow(lin[i], 2.5);
        sym[i] = -1.0 + 2.0 * i / 100.0;
        sq[i] = sym[i] * sym[i];
    }
    CHECK(std::abs(pearson(lin, pw)) < 0.95);
    CHECK(distance_correlation(lin, pw) > 0.95);
    CHECK(drop_correlated(columns({lin, pw})) == std::vector<std::size_t>{0});
    // y = x^2 on symmetric x: Pearson 0 and dCor well below the threshold.
    CHECK(std::abs(pearson(sym, sq)) < 1e-12);
    CHECK(distance_correlation(sym, sq) < 0.95);
    CHECK(drop_correlated(columns({sym, sq})) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("every strategy ranks a single planted feature first") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    Matrix x(300, 25);
    std::vector<int> y(300);
    for (std::size_t i = 0; i < 300; ++i) {
        for (std::size_t j = 0; j < 25; ++j) x(i, j) = g(rng);
        y[i] = x(i, 7) > 0;
    }
    RankingOptions o;
    o.forest_trees = 100;
    o.rfe_trees = 50;
    o.keep = 10;
    for (auto s : kAllStrategies) {
        const auto r = rank_features(x, y, s, 99, o);
        CAPTURE(strategy_tag(s));
        CHECK(r.order.front() == 7);
        auto sorted = r.order;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t k = 0; k < sorted.size(); ++k) CHECK(sorted[k] == k);
        CHECK(r.scores.size() == r.order.size());
        CHECK(rank_features(x, y, s, 99, o).order == r.order);
        CHECK(strategy_from_tag(strategy_tag(s)) == s);
    }
    CHECK_THROWS_AS(rank_features(x, std::vector<int>(300, 1), Strategy::Lasso, 1), InvalidArgument);
}

TEST_CASE("lasso keeps at least one of a duplicated informative pair") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g;
    Matrix x(200, 12);
    std::vector<int> y(200);
    for (std::size_t i = 0; i < 200; ++i) {
        for (std::size_t j = 0; j < 12; ++j) x(i, j) = g(rng);
        x(i, 9) = x(i, 3);
        y[i] = x(i, 3) + 0.5 * g(rng) > 0;
    }
    RankingOptions o;
    o.keep = 3;
    const auto r = rank_features(x, y, Strategy::Lasso, 1, o);
    CHECK((r.order[0] == 3 || r.order[0] == 9));
    CHECK(r.scores[0] > 0.0);
}

TEST_CASE("select_stable") {
    FeatureRanking base;
    for (std::size_t i = 0; i < 100; ++i) base.order.push_back((i * 37) % 100);
    base.scores.assign(100, 0.0);
    std::vector<FeatureRanking> same(6, base);
    const auto s = select_stable(same, 30, 20);
    CHECK(s.intersection.size() == 30);
    CHECK(s.indices == std::vector<std::size_t>(base.order.begin(), base.order.begin() + 20));

    std::vector<FeatureRanking> disjoint;
    for (std::size_t k = 0; k < 6; ++k) {
        FeatureRanking r;
        for (std::size_t i = 0; i < 180; ++i) r.order.push_back((i + 30 * k) % 180);
        r.scores.assign(180, 0.0);
        disjoint.push_back(r);
    }
    const auto d = select_stable(disjoint, 30, 20);
    CHECK(d.intersection.empty());
    REQUIRE(d.indices.size() == 20);
    // Feature f sits at position (f - 30k) mod 180 in ranking k, so its mean
    // position is (f mod 30) + 75; ties go to the lower index.
    std::vector<std::size_t> expect;
    for (std::size_t r = 0; expect.size() < 20; ++r)
        for (std::size_t m = 0; m < 6 && expect.size() < 20; ++m) expect.push_back(r + 30 * m);
    CHECK(d.indices == expect);
    for (std::size_t i : d.intersection)
        for (const auto& t : d.top_sets) CHECK(std::binary_search(t.begin(), t.end(), i));

    const std::string j = to_json(disjoint, d);
    CHECK(j.find("\"RFE\"") != std::string::npos);
}
