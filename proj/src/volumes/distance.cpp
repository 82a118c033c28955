#include "livseg/volumes/distance.hpp"

#include <algorithm>

namespace livseg::volumes {
namespace {

using i64 = std::int64_t;
constexpr i64 kInf = SignedDistanceField::kInfinity;

// Exact parabola intersection abscissa num/den with den > 0.
struct Rational {
    i64 num = 0;
    i64 den = 1;
};

bool less_equal(const Rational& a, const Rational& b) { return a.num * b.den <= b.num * a.den; }
bool less_than(const Rational& a, i64 x) { return a.num < x * a.den; }

struct EnvelopeScratch {
    std::vector<int> sites;
    std::vector<Rational> starts; // starts[k] = left end of sites[k]'s interval; starts[0] unused
};

// out[x] = min over finite f[q] of (x - q)^2 + f[q].
void envelope_1d(const std::vector<i64>& f, std::vector<i64>& out, EnvelopeScratch& s) {
    const int n = static_cast<int>(f.size());
    auto& v = s.sites;
    auto& z = s.starts;
    v.clear();
    z.clear();
    for (int q = 0; q < n; ++q) {
        if (f[q] == kInf) continue;
        const i64 fq = f[q] + static_cast<i64>(q) * q;
        Rational start{};
        while (!v.empty()) {
            const int p = v.back();
            const i64 fp = f[p] + static_cast<i64>(p) * p;
            start = Rational{fq - fp, 2 * static_cast<i64>(q - p)};
            if (v.size() > 1 && less_equal(start, z.back())) {
                v.pop_back();
                z.pop_back();
                continue;
            }
            break;
        }
        v.push_back(q);
        z.push_back(start);
    }
    if (v.empty()) {
        std::fill(out.begin(), out.end(), kInf);
        return;
    }
    std::size_t k = 0;
    for (int x = 0; x < n; ++x) {
        while (k + 1 < v.size() && less_than(z[k + 1], x)) ++k;
        const i64 dx = x - v[k];
        out[x] = dx * dx + f[v[k]];
    }
}

} // namespace

bool is_boundary_voxel(const Mask3D& m, int x, int y, int z) {
    if (!m.test(x, y, z)) return false;
    const Grid& g = m.grid();
    constexpr int off[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    for (const auto& o : off) {
        const int a = x + o[0], b = y + o[1], c = z + o[2];
        if (g.contains(a, b, c) && !m.test(a, b, c)) return true;
    }
    return false;
}

SignedDistanceField signed_edt(const Mask3D& m) {
    const Grid& g = m.grid();
    const Dims d = g.dims;
    std::vector<i64> sq(g.size(), kInf);
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x)
                if (is_boundary_voxel(m, x, y, z)) sq[g.index(x, y, z)] = 0;

    EnvelopeScratch scratch;
    std::vector<i64> line, result;
    auto run_axis = [&](int n, int count_a, int count_b, auto index_of) {
        line.resize(n);
        result.resize(n);
        for (int b = 0; b < count_b; ++b)
            for (int a = 0; a < count_a; ++a) {
                for (int i = 0; i < n; ++i) line[i] = sq[index_of(i, a, b)];
                envelope_1d(line, result, scratch);
                for (int i = 0; i < n; ++i) sq[index_of(i, a, b)] = result[i];
            }
    };
    run_axis(d.nx, d.ny, d.nz, [&](int i, int a, int b) { return g.index(i, a, b); });
    run_axis(d.ny, d.nx, d.nz, [&](int i, int a, int b) { return g.index(a, i, b); });
    run_axis(d.nz, d.nx, d.ny, [&](int i, int a, int b) { return g.index(a, b, i); });

    for (std::size_t i = 0; i < sq.size(); ++i)
        if (m.test(i)) sq[i] = -sq[i];
    return SignedDistanceField(g, std::move(sq));
}

} // namespace livseg::volumes
