#include <algorithm>
#include <cmath>
#include <numeric>

#include "livseg/featsel/featsel.hpp"

namespace livseg::featsel {

Matrix StandardizationParams::apply(const Matrix& x) const {
    if (x.cols() != mean.size()) throw InvalidArgument("standardize: column count does not match the fitted params");
    Matrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = (x(r, c) - mean[c]) / std[c];
    return out;
}

StandardizationParams fit_standardize(const Matrix& train) {
    if (train.rows() < 2) throw InvalidArgument("standardize: at least two training rows are required");
    const double n = static_cast<double>(train.rows());
    StandardizationParams p;
    p.mean.assign(train.cols(), 0.0);
    p.std.assign(train.cols(), 0.0);
    for (std::size_t c = 0; c < train.cols(); ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < train.rows(); ++r) s += train(r, c);
        const double m = s / n;
        double v = 0.0;
        for (std::size_t r = 0; r < train.rows(); ++r) v += (train(r, c) - m) * (train(r, c) - m);
        p.mean[c] = m;
        p.std[c] = std::max(std::sqrt(v / n), kStdFloor);
    }
    return p;
}

Standardized fit_apply_standardize(const Matrix& train, std::span<const Matrix> others) {
    Standardized s;
    s.params = fit_standardize(train);
    s.train = s.params.apply(train);
    for (const auto& o : others) s.others.push_back(s.params.apply(o));
    return s;
}

std::vector<std::size_t> drop_near_zero_variance(const Matrix& x, double eps) {
    std::vector<std::size_t> keep;
    if (x.rows() == 0) return keep;
    const double n = static_cast<double>(x.rows());
    for (std::size_t c = 0; c < x.cols(); ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < x.rows(); ++r) s += x(r, c);
        const double m = s / n;
        double v = 0.0;
        for (std::size_t r = 0; r < x.rows(); ++r) v += (x(r, c) - m) * (x(r, c) - m);
        if (!(v / n < eps)) keep.push_back(c);
    }
    return keep;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) throw InvalidArgument("pearson: length mismatch");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

namespace {

// Per-variable quantities reused across all pairs.
struct DcorColumn {
    std::vector<double> v;           // standardized values
    std::vector<std::size_t> order;  // argsort of v
    std::vector<int> rank;           // dense rank of v
    int levels = 0;
    std::vector<double> row_sum;     // a_j. = sum_k |v_j - v_k|
    double total = 0.0;              // a..
    double dvar = 0.0;               // squared distance variance
};

DcorColumn prepare(std::span<const double> x) {
    const std::size_t n = x.size();
    const double dn = static_cast<double>(n);
    DcorColumn c;
    double m = 0.0;
    for (double v : x) m += v;
    m /= dn;
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    const double sd = std::sqrt(ss / dn);
    c.v.resize(n);
    for (std::size_t i = 0; i < n; ++i) c.v[i] = sd > 0.0 ? (x[i] - m) / sd : 0.0;

    c.order.resize(n);
    std::iota(c.order.begin(), c.order.end(), 0);
    std::stable_sort(c.order.begin(), c.order.end(), [&](std::size_t a, std::size_t b) { return c.v[a] < c.v[b]; });
    c.rank.resize(n);
    int r = -1;
    for (std::size_t k = 0; k < n; ++k) {
        if (k == 0 || c.v[c.order[k]] != c.v[c.order[k - 1]]) ++r;
        c.rank[c.order[k]] = r;
    }
    c.levels = r + 1;

    double total = 0.0;
    for (double v : c.v) total += v;
    double prefix = 0.0;
    c.row_sum.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double s = c.v[c.order[k]];
        const double below = s * static_cast<double>(k) - prefix;
        const double above = (total - prefix - s) - s * static_cast<double>(n - k - 1);
        c.row_sum[c.order[k]] = below + above;
        prefix += s;
    }
    for (double a : c.row_sum) c.total += a;

    double sq = 0.0, s1 = 0.0, ra2 = 0.0;
    for (double v : c.v) {
        sq += v * v;
        s1 += v;
    }
    for (double a : c.row_sum) ra2 += a * a;
    const double pair_sq = 2.0 * dn * sq - 2.0 * s1 * s1;
    c.dvar = pair_sq / (dn * dn) - 2.0 * ra2 / (dn * dn * dn) + c.total * c.total / (dn * dn * dn * dn);
    return c;
}

// sum_{j,k} |x_j - x_k| |y_j - y_k| by a sweep over x with Fenwick sums over y.
double cross_sum(const DcorColumn& x, const DcorColumn& y) {
    const int m = y.levels;
    std::vector<double> cnt(m + 1, 0.0), sx(m + 1, 0.0), sy(m + 1, 0.0), sxy(m + 1, 0.0);
    auto add = [&](int i, double a, double b) {
        for (++i; i <= m; i += i & -i) {
            cnt[i] += 1.0;
            sx[i] += a;
            sy[i] += b;
            sxy[i] += a * b;
        }
    };
    double tc = 0.0, tx = 0.0, ty = 0.0, txy = 0.0;
    double acc = 0.0;
    for (std::size_t k = 0; k < x.order.size(); ++k) {
        const std::size_t j = x.order[k];
        const double xj = x.v[j], yj = y.v[j];
        double c = 0.0, qx = 0.0, qy = 0.0, qxy = 0.0;
        for (int i = y.rank[j] + 1; i > 0; i -= i & -i) {
            c += cnt[i];
            qx += sx[i];
            qy += sy[i];
            qxy += sxy[i];
        }
        // Earlier points (x_k <= x_j) with y_k <= y_j, then with y_k > y_j.
        const double low = c * xj * yj - xj * qy - yj * qx + qxy;
        const double hc = tc - c, hx = tx - qx, hy = ty - qy, hxy = txy - qxy;
        const double high = -(hc * xj * yj - xj * hy - yj * hx + hxy);
        acc += low + high;
        add(y.rank[j], xj, yj);
        tc += 1.0;
        tx += xj;
        ty += yj;
        txy += xj * yj;
    }
    return 2.0 * acc;
}

double dcor_prepared(const DcorColumn& a, const DcorColumn& b) {
    if (a.dvar <= 0.0 || b.dvar <= 0.0) return 0.0;
    const double n = static_cast<double>(a.v.size());
    double rab = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) rab += a.row_sum[i] * b.row_sum[i];
    const double dcov = cross_sum(a, b) / (n * n) - 2.0 * rab / (n * n * n) + a.total * b.total / (n * n * n * n);
    const double r2 = dcov / std::sqrt(a.dvar * b.dvar);
    return std::sqrt(std::clamp(r2, 0.0, 1.0));
}

} // namespace

double distance_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw InvalidArgument("distance_correlation: need two equal-length samples");
    return dcor_prepared(prepare(a), prepare(b));
}

std::vector<std::size_t> drop_correlated(const Matrix& x, double pearson_max, double dcor_max) {
    if (x.rows() < 3) throw InvalidArgument("drop_correlated: at least three rows are required");
    const double n = static_cast<double>(x.rows());
    std::vector<std::size_t> kept;
    std::vector<DcorColumn> cache;
    for (std::size_t c = 0; c < x.cols(); ++c) {
        const auto col = x.column(c);
        DcorColumn cur = prepare(col);
        bool drop = false;
        for (std::size_t k = 0; k < kept.size() && !drop; ++k) {
            double dot = 0.0;
            for (std::size_t i = 0; i < cur.v.size(); ++i) dot += cur.v[i] * cache[k].v[i];
            if (std::abs(dot / n) > pearson_max || dcor_prepared(cache[k], cur) > dcor_max) drop = true;
        }
        if (!drop) {
            kept.push_back(c);
            cache.push_back(std::move(cur));
        }
    }
    return kept;
}

} // namespace livseg::featsel
