// Acceptance runner: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion ids...]   (all when none are given)

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "livseg/ensemble/forest.hpp"
#include "livseg/eval/metrics.hpp"
#include "livseg/featsel/featsel.hpp"
#include "livseg/neural/attention.hpp"
#include "livseg/neural/cnn.hpp"
#include "livseg/neural/loss.hpp"
#include "livseg/neural/tensor.hpp"
#include "livseg/neural/train.hpp"
#include "livseg/phantom/phantom.hpp"
#include "livseg/pipeline/pipeline.hpp"
#include "livseg/postproc/postproc.hpp"
#include "livseg/radiomics/features.hpp"
#include "livseg/radiomics/manifest.hpp"
#include "livseg/radiomics/wavelet.hpp"
#include "livseg/volumes/components.hpp"
#include "livseg/volumes/distance.hpp"
#include "livseg/volumes/preprocess.hpp"
#include "support/brute_force.hpp"
#include "support/patches.hpp"
#include "support/synthetic.hpp"
#include "support/transforms.hpp"

using namespace livseg;
using volumes::Grid;
using volumes::Mask3D;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

Grid grid(int nx, int ny, int nz, volumes::Spacing s = {}) { return Grid{{nx, ny, nz}, s}; }

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); }

// 1. Otsu against exhaustive maximisation of the between-class variance.
Outcome otsu_oracle() {
    std::mt19937_64 rng(1001);
    int equal = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        postproc::Histogram256 h;
        std::uniform_real_distribution<double> mass(0.0, 1.0);
        std::uniform_int_distribution<int> count(0, 500);
        std::bernoulli_distribution sparse(std::uniform_real_distribution<double>(0.0, 0.95)(rng));
        const bool integer = t % 2 == 0;
        for (auto& c : h.counts)
            c = sparse(rng) ? 0.0 : (integer ? static_cast<double>(count(rng)) : mass(rng) * 1000.0);
        // At least two occupied levels.
        std::uniform_int_distribution<int> lvl(0, 255);
        const int a = lvl(rng);
        h.counts[a] += 1.0;
        h.counts[(a + 1 + lvl(rng) % 255) % 256] += 1.0;
        if (postproc::otsu_threshold(h).tau_star == testing::brute_force_otsu(h)) ++equal;
    }
    return {equal == trials, fmt("%d/%d thresholds equal", equal, trials)};
}

// 2. Every in-plane component below 9 voxels disappears.
Outcome speck_removal() {
    std::mt19937_64 rng(2002);
    std::size_t small = 0, survived = 0;
    for (int t = 0; t < 500; ++t) {
        const Grid g = grid(24 + t % 9, 20 + t % 7, 3 + t % 3);
        Mask3D m(g);
        std::bernoulli_distribution speck(std::uniform_real_distribution<double>(0.01, 0.25)(rng));
        for (std::size_t i = 0; i < g.size(); ++i) m.set(i, speck(rng));
        std::uniform_int_distribution<int> bx(0, g.dims.nx - 1), by(0, g.dims.ny - 1), bz(0, g.dims.nz - 1);
        std::uniform_int_distribution<int> side(1, 6);
        for (int b = 0; b < 4; ++b) {
            const int x0 = bx(rng), y0 = by(rng), z0 = bz(rng), w = side(rng), h = side(rng);
            for (int y = y0; y < std::min(g.dims.ny, y0 + h); ++y)
                for (int x = x0; x < std::min(g.dims.nx, x0 + w); ++x) m.set(x, y, z0, true);
        }
        const auto out = postproc::morph_smooth(m);
        const auto lab = volumes::connected_components(m, volumes::Connectivity::InPlaneEight);
        for (const auto& c : lab.components) {
            if (c.size >= 9) continue;
            ++small;
            if (std::any_of(c.voxels.begin(), c.voxels.end(), [&](std::size_t v) { return out.test(v); })) ++survived;
        }
    }
    return {survived == 0 && small > 0, fmt("%zu small components, %zu survived", small, survived)};
}

// 3. Temporal rule: truth table, monotonicity, idempotence.
Outcome temporal_rule() {
    const Grid g = grid(1, 1, 3);
    int cases = 0, agree = 0;
    for (bool suppress : {false, true})
        for (int bits = 0; bits < 8; ++bits)
            for (int a = 0; a <= 10; ++a)
                for (int b = 0; b <= 10; ++b) {
                    const bool below = bits & 1, here = bits & 2, above = bits & 4;
                    const float pb = a / 10.0f, pa = b / 10.0f;
                    const Mask3D y(g, {std::uint8_t(below), std::uint8_t(here), std::uint8_t(above)});
                    const volumes::ProbMap3D p(g, {pb, 0.5f, pa});
                    const bool got = postproc::temporal_refine(y, p, suppress).test(1);
                    ++cases;
                    agree += got == testing::temporal_rule(below, here, above, pb, pa, suppress);
                }
    std::mt19937_64 rng(3003);
    std::bernoulli_distribution fg(0.5);
    std::uniform_real_distribution<float> u(0.f, 1.f);
    int monotone = 0, idempotent = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        const Grid vg = grid(6, 5, 9);
        Mask3D y(vg);
        std::vector<float> pv(vg.size());
        for (std::size_t i = 0; i < vg.size(); ++i) {
            y.set(i, fg(rng));
            pv[i] = u(rng);
        }
        const volumes::ProbMap3D p(vg, pv);
        const auto once = postproc::temporal_refine(y, p);
        bool mono = true;
        for (std::size_t i = 0; i < vg.size(); ++i)
            if (y.test(i) && !once.test(i)) mono = false;
        monotone += mono;
        idempotent += postproc::temporal_refine(once, p) == once;
    }
    return {agree == cases && monotone == trials && idempotent == trials,
            fmt("truth table %d/%d, monotone %d/%d, idempotent %d/%d", agree, cases, monotone, trials, idempotent,
                trials)};
}

// 4. Feature vector contract.
Outcome feature_contract() {
    using namespace radiomics;
    const auto& m = FeatureManifest::standard();
    const auto names = m.names();
    auto prefixed = [&](const std::string& p) {
        return std::count_if(names.begin(), names.end(), [&](const std::string& n) { return n.rfind(p, 0) == 0; });
    };
    const bool subtotals = m.count(FeatureGroup::FirstOrder, "core") == 34 && m.count(FeatureGroup::Gradient, "core") == 2 &&
                           m.count(FeatureGroup::RunLength, "core") == 11 && m.count(FeatureGroup::Glcm, "core") == 22 &&
                           m.count(FeatureGroup::Shape, "core") == 8 && m.count(FeatureGroup::Moments, "core") == 3 &&
                           prefixed("core.") == 80 && prefixed("band.") == 72 && prefixed("wavelet_") == 576 &&
                           m.size() == 728;

    std::mt19937_64 rng(4004);
    std::size_t regions = 0, right_length = 0, repeatable = 0;
    std::vector<std::pair<volumes::Volume3D, CandidateRegion>> cases;
    for (int t = 0; t < 12; ++t)
        cases.push_back(testing::random_case(rng, grid(10 + t % 4, 12, 9 + t % 3, {0.7, 0.7, 1.0 + 0.5 * (t % 3)})));
    // Candidate regions of a phantom case as well.
    const auto ph = phantom::generate_phantom(phantom::random_spec(4004));
    const auto norm = volumes::clip_rescale_hu(ph.ct);
    const auto cand = extract_candidate_regions(postproc::binarize(ph.p_tumor, postproc::ThresholdMode::OtsuPerVolume).mask);
    for (const auto& [vol, r] : cases) {
        const auto a = extract_features(r, vol);
        const auto b = extract_features(r, vol);
        ++regions;
        right_length += a.values.size() == 728;
        repeatable += a.values == b.values;
    }
    const auto one = extract_all(cand, norm, 1);
    const auto three = extract_all(cand, norm, 3);
    for (std::size_t i = 0; i < one.size(); ++i) {
        ++regions;
        right_length += one[i].values.size() == 728;
        repeatable += one[i].values == three[i].values;
    }

    // Permutation invariance of texture and intensity blocks (exact), and
    // rotation invariance of the moments (relative 1e-9).
    const std::array<std::array<int, 3>, 5> perms{{{1, 0, 2}, {2, 1, 0}, {0, 2, 1}, {1, 2, 0}, {2, 0, 1}}};
    int inv_checks = 0, inv_ok = 0;
    for (int t = 0; t < 10; ++t) {
        auto [vol, r] = testing::random_case(rng, grid(9, 10, 11), t % 2 ? 8 : 256);
        const auto rl = rlm_features(r, vol);
        const auto gl = glcm_features(r, vol);
        const auto fo = first_order_features(r, vol);
        for (const auto& p : perms) {
            const auto pv = testing::permute(vol, p);
            const auto pr = testing::permute(r, p);
            ++inv_checks;
            inv_ok += rlm_features(pr, pv) == rl && glcm_features(pr, pv) == gl && first_order_features(pr, pv) == fo;
        }
        auto [rv, rr] = testing::random_case(rng, grid(9, 11, 8, {0.6, 0.9, 2.0}));
        const auto a = moment_invariants(rr, rv);
        const auto b = moment_invariants(testing::rotate(rr), testing::rotate(rv));
        bool ok = true;
        for (int k = 0; k < 3; ++k) ok &= std::abs(a[k] - b[k]) <= 1e-9 * std::max(1.0, std::abs(a[k]));
        ++inv_checks;
        inv_ok += ok;
    }
    const bool pass = subtotals && right_length == regions && repeatable == regions && inv_ok == inv_checks;
    return {pass, fmt("subtotals %s, length 728 on %zu/%zu regions, identical %zu/%zu, invariances %d/%d",
                      subtotals ? "ok" : "wrong", right_length, regions, repeatable, regions, inv_ok, inv_checks)};
}

// 5. Haar reconstruction and energy.
Outcome haar() {
    std::mt19937_64 rng(5005);
    std::normal_distribution<double> n(0.0, 100.0);
    double worst_err = 0.0, worst_energy = 0.0;
    for (int t = 0; t < 200; ++t) {
        std::uniform_int_distribution<int> half(1, 8);
        const Grid g = grid(2 * half(rng), 2 * half(rng), 2 * half(rng), {0.5 + 0.1 * (t % 5), 0.8, 1.0 + t % 3});
        std::vector<double> v(g.size());
        for (auto& x : v) x = n(rng);
        const radiomics::RealField f(g, v);
        const auto bands = radiomics::haar_analysis(f);
        const auto back = radiomics::haar_synthesis(bands);
        double e_in = 0.0, e_out = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            worst_err = std::max(worst_err, std::abs(back[i] - v[i]));
            e_in += v[i] * v[i];
        }
        for (const auto& b : bands)
            for (double x : b.data()) e_out += x * x;
        worst_energy = std::max(worst_energy, std::abs(e_out - e_in) / e_in);
    }
    return {worst_err < 1e-9 && worst_energy < 1e-6,
            fmt("max reconstruction error %.3g, max relative energy gap %.3g", worst_err, worst_energy)};
}

// 6. Signed EDT against brute force.
Outcome edt() {
    std::size_t masks = 0, equal = 0;
    auto check = [&](const Mask3D& m) {
        const auto d = volumes::signed_edt(m);
        const auto ref = testing::brute_force_signed_sq(m);
        bool same = true;
        for (std::size_t i = 0; i < m.size() && same; ++i) {
            auto expect = ref[i];
            if (expect == -std::numeric_limits<std::int64_t>::max()) expect = -volumes::SignedDistanceField::kInfinity;
            same = d.signed_squared(i) == expect;
        }
        ++masks;
        equal += same;
    };
    // Every mask of a 2x2x4 grid.
    for (std::uint32_t bits = 0; bits < (1u << 16); ++bits) {
        Mask3D m(grid(2, 2, 4));
        for (int i = 0; i < 16; ++i) m.set(i, (bits >> i) & 1u);
        check(m);
    }
    // On 4^3: every 4x4 pattern extruded through z, every union of 2^3
    // blocks, and every mask with at most two foreground or two background voxels.
    const Grid g4 = grid(4, 4, 4);
    for (std::uint32_t bits = 0; bits < (1u << 16); ++bits) {
        Mask3D m(g4);
        for (std::size_t i = 0; i < g4.size(); ++i) {
            const auto p = g4.coords(i);
            m.set(i, (bits >> (p.y * 4 + p.x)) & 1u);
        }
        check(m);
    }
    for (std::uint32_t bits = 0; bits < 256; ++bits) {
        Mask3D m(g4);
        for (std::size_t i = 0; i < g4.size(); ++i) {
            const auto p = g4.coords(i);
            m.set(i, (bits >> ((p.z / 2) * 4 + (p.y / 2) * 2 + p.x / 2)) & 1u);
        }
        check(m);
    }
    for (bool fg : {true, false})
        for (std::size_t a = 0; a < 64; ++a)
            for (std::size_t b = a; b < 64; ++b) {
                Mask3D m(g4);
                for (std::size_t i = 0; i < 64; ++i) m.set(i, !fg);
                m.set(a, fg);
                m.set(b, fg);
                check(m);
            }
    std::mt19937_64 rng(6006);
    for (int t = 0; t < 200; ++t) {
        Mask3D m(grid(12, 12, 12));
        std::bernoulli_distribution p(std::uniform_real_distribution<double>(0.05, 0.95)(rng));
        for (std::size_t i = 0; i < m.size(); ++i) m.set(i, p(rng));
        check(m);
    }
    return {equal == masks, fmt("%zu/%zu masks exact", equal, masks)};
}

// 7. Forest on the two-blob benchmark.
Outcome forest_blobs() {
    const auto data = testing::gaussian_blobs(2000, 4.0, 7007);
    const auto [train, test] = testing::split(data, 0.75, 7);
    ensemble::ForestParams p;
    p.seed = 7;
    const auto m = ensemble::train_forest(train.x, train.y, p);
    const auto prob = m.predict_proba(test.x);
    std::size_t right = 0;
    for (std::size_t i = 0; i < prob.size(); ++i) right += (prob[i] >= 0.5) == (test.y[i] == 1);
    const double acc = static_cast<double>(right) / prob.size();
    return {acc >= 0.95 && m.trees.size() == 350, fmt("held-out accuracy %.4f with %zu trees", acc, m.trees.size())};
}

// 8. Feature selection recovers planted features.
Outcome featsel_recovery() {
    std::vector<std::size_t> planted;
    const auto d = testing::planted_features(500, 20, 200, 8008, &planted);
    std::vector<featsel::FeatureRanking> rankings;
    for (auto s : featsel::kAllStrategies) rankings.push_back(featsel::rank_features(d.x, d.y, s, 8));
    const auto subset = featsel::select_stable(rankings, 30, 20);
    std::size_t hit = 0;
    for (auto i : subset.indices) hit += std::binary_search(planted.begin(), planted.end(), i);

    // One planted column among noise must come first for every strategy.
    std::mt19937_64 rng(8009);
    std::normal_distribution<double> g;
    Matrix x(300, 40);
    std::vector<int> y(300);
    for (std::size_t i = 0; i < 300; ++i) {
        y[i] = static_cast<int>(i % 2);
        for (std::size_t j = 0; j < 40; ++j) x(i, j) = g(rng);
        x(i, 13) += y[i] ? 1.0 : -1.0;
    }
    int first = 0;
    std::string misses;
    for (auto s : featsel::kAllStrategies) {
        const bool ok = featsel::rank_features(x, y, s, 9).order.front() == 13;
        first += ok;
        if (!ok) misses += " " + std::string(featsel::strategy_tag(s));
    }
    return {hit >= 16 && first == 6,
            fmt("stable subset recovers %zu/20 planted; single planted first for %d/6 strategies%s", hit, first,
                misses.c_str())};
}

// 9. Full-width CNN on the sphere task plus gradient checks.
double cnn_fd_worst(const neural::CnnArchitecture& arch, std::uint64_t seed) {
    using namespace neural;
    auto m = Cnn3dModel::initialized(arch, seed);
    for (std::size_t i = 0; i < m.params().size(); ++i) m.params()[i] += 0.01 * std::sin(3.0 * i);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    const int s = arch.patch_size;
    Tensor x({3, s, s, s});
    for (double& v : x.data) v = nd(rng);
    const std::vector<double> y{1.0, 0.0, 1.0};
    ForwardCache cache;
    forward(m, x, &cache);
    const auto grad = backward(m, cache, y);
    double worst = 0.0;
    const double h = 1e-6;
    // Every parameter of small stacks, a spread of them otherwise.
    const std::size_t stride = std::max<std::size_t>(1, grad.size() / 600);
    for (std::size_t k = 0; k < grad.size(); k += stride) {
        const double keep = m.params()[k];
        m.params()[k] = keep + h;
        const double lp = bce_sum(forward(m, x), y);
        m.params()[k] = keep - h;
        const double lm = bce_sum(forward(m, x), y);
        m.params()[k] = keep;
        worst = std::max(worst, rel_err(grad[k], (lp - lm) / (2 * h)));
    }
    return worst;
}

double seg_loss_fd_worst() {
    std::mt19937_64 rng(9009);
    std::uniform_real_distribution<double> ud(0.05, 0.95);
    std::uniform_int_distribution<int> bit(0, 1);
    const std::size_t n = 40;
    std::vector<double> pl(n), pt(n), ql(n), qt(n);
    for (std::size_t i = 0; i < n; ++i) {
        pl[i] = ud(rng);
        pt[i] = ud(rng);
        ql[i] = bit(rng);
        qt[i] = bit(rng);
    }
    const auto base = neural::seg_loss(pl, pt, ql, qt);
    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto a = pl, b = pl;
        a[i] += h;
        b[i] -= h;
        worst = std::max(worst, rel_err(base.grad_liver[i],
                                        (neural::seg_loss(a, pt, ql, qt).loss - neural::seg_loss(b, pt, ql, qt).loss) / (2 * h)));
        a = pt;
        b = pt;
        a[i] += h;
        b[i] -= h;
        worst = std::max(worst, rel_err(base.grad_tumor[i],
                                        (neural::seg_loss(pl, a, ql, qt).loss - neural::seg_loss(pl, b, ql, qt).loss) / (2 * h)));
    }
    return worst;
}

double attention_fd_worst() {
    using namespace neural;
    std::mt19937_64 rng(9010);
    std::normal_distribution<double> nd(0.0, 1.0);
    Tensor x({3, 4, 5}), g({2, 2, 3}), up({3, 4, 5});
    for (double& v : x.data) v = nd(rng);
    for (double& v : g.data) v = nd(rng);
    for (double& v : up.data) v = nd(rng);
    auto p = AttentionGateParams::zeros(4, 3, 2);
    for (auto* w : {&p.wx, &p.wg, &p.b, &p.psi})
        for (double& v : *w) v = nd(rng);
    auto objective = [&](const Tensor& xx, const Tensor& gg, const AttentionGateParams& pp) {
        const auto o = attention_gate(xx, gg, pp);
        double s = 0.0;
        for (std::size_t i = 0; i < up.size(); ++i) s += up.data[i] * o.gated.data[i];
        return s;
    };
    const auto gr = attention_gate_backward(x, g, p, up);
    const double h = 1e-6;
    double worst = 0.0;
    auto probe = [&](std::vector<double>& v, const std::vector<double>& analytic, auto eval) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double keep = v[i];
            v[i] = keep + h;
            const double a = eval();
            v[i] = keep - h;
            const double b = eval();
            v[i] = keep;
            worst = std::max(worst, rel_err(analytic[i], (a - b) / (2 * h)));
        }
    };
    auto eval = [&] { return objective(x, g, p); };
    probe(x.data, gr.dx.data, eval);
    probe(g.data, gr.dg.data, eval);
    probe(p.wx, gr.dparams.wx, eval);
    probe(p.wg, gr.dparams.wg, eval);
    probe(p.b, gr.dparams.b, eval);
    probe(p.psi, gr.dparams.psi, eval);
    return worst;
}

Outcome cnn_sphere() {
    using namespace neural;
    CnnArchitecture tiny;
    tiny.patch_size = 5;
    tiny.conv_channels = {2, 3, 3};
    tiny.pool_after = {0, 2};
    tiny.fc_hidden = 3;
    CnnArchitecture narrow_full = CnnArchitecture{};
    narrow_full.conv_channels = {2, 2, 3, 3, 4};
    narrow_full.fc_hidden = 4;
    const double g_cnn = std::max({cnn_fd_worst(tiny, 1), cnn_fd_worst(narrow_full, 2)});
    const double g_loss = seg_loss_fd_worst();
    const double g_att = attention_fd_worst();

    const auto train = testing::sphere_patches(2000, 11, 90);
    const auto val = testing::sphere_patches(500, 11, 91);
    TrainSchedule sch;  // Adam 1e-3 then SGD 1e-4 with momentum 0.9
    sch.sgd_epochs = 40 - sch.adam_epochs;
    sch.target_val_accuracy = 0.95;
    const auto r = train_patch_cnn(train, val, CnnArchitecture{}, sch, 9);
    double best_acc = 0.0;
    for (const auto& e : r.history) best_acc = std::max(best_acc, e.val_accuracy);
    const int epochs = static_cast<int>(r.history.size());
    const bool grads = g_cnn < 1e-4 && g_loss < 1e-4 && g_att < 1e-4;
    return {grads && best_acc >= 0.95 && epochs <= 40,
            fmt("val accuracy %.4f after %d epochs (%s); grad rel err cnn %.2g, loss %.2g, gate %.2g", best_acc, epochs,
                r.stop_reason.c_str(), g_cnn, g_loss, g_att)};
}

// 10. Pixel shuffle round trips.
Outcome pixel_shuffle() {
    std::mt19937_64 rng(10010);
    std::uniform_int_distribution<int> dim(1, 6), val(-1000, 1000);
    int ok = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        const int r = t % 3 == 0 ? 3 : 2;
        const int c = dim(rng) * r * r, h = dim(rng), w = dim(rng);
        neural::Tensor x({c, h, w});
        for (double& v : x.data) v = val(rng) / 8.0;
        const auto y = neural::pixel_shuffle(x, r);
        const auto back = neural::pixel_unshuffle(y, r);
        auto a = x.data, b = y.data;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        const auto again = neural::pixel_shuffle(neural::pixel_unshuffle(y, r), r);
        ok += back.data == x.data && back.shape == x.shape && a == b && again.data == y.data &&
              y.shape == std::vector<int>{c / (r * r), h * r, w * r};
    }
    return {ok == trials, fmt("%d/%d tensors round trip with equal value multisets", ok, trials)};
}

// 11. Metric unit cases and exact Wilcoxon.
double enumerate_p(const std::vector<double>& d) {
    std::vector<double> nz;
    for (double v : d)
        if (v != 0) nz.push_back(v);
    const std::size_t n = nz.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return std::abs(nz[a]) < std::abs(nz[b]); });
    std::vector<double> rank(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && std::abs(nz[idx[j + 1]]) == std::abs(nz[idx[i]])) ++j;
        for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = (i + j) / 2.0 + 1.0;
        i = j + 1;
    }
    double w_obs = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (nz[i] > 0) w_obs += rank[i];
    const double total = n * (n + 1) / 4.0;
    std::size_t extreme = 0;
    for (std::uint32_t s = 0; s < (1u << n); ++s) {
        double w = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if ((s >> i) & 1u) w += rank[i];
        if (std::abs(w - total) >= std::abs(w_obs - total) - 1e-9) ++extreme;
    }
    return std::min(1.0, static_cast<double>(extreme) / (1u << n));
}

Outcome metrics_and_wilcoxon() {
    const Grid g = grid(20, 20, 1);
    Mask3D p(g), t(g), q(g);
    for (int i = 0; i < 100; ++i) p.set(i, true);
    for (int i = 50; i < 150; ++i) t.set(i, true);
    for (int i = 200; i < 300; ++i) q.set(i, true);
    const auto same = eval::compute_metrics(p, p);
    const auto disjoint = eval::compute_metrics(p, q);
    const auto half = eval::compute_metrics(p, t);
    const bool units = same.dice == 1.0 && same.sensitivity == 1.0 && same.ppv == 1.0 && disjoint.dice == 0.0 &&
                       disjoint.sensitivity == 0.0 && disjoint.ppv == 0.0 && half.dice == 0.5 &&
                       half.sensitivity == 0.5 && half.ppv == 0.5;

    std::mt19937_64 rng(11011);
    int trials = 0, equal = 0;
    for (std::size_t n = 5; n <= 12; ++n)
        for (int rep = 0; rep < 40; ++rep) {
            std::vector<double> d(n);
            std::uniform_int_distribution<int> mag(1, rep % 2 ? 4 : 1000);
            std::bernoulli_distribution sign(0.3 + 0.01 * rep);
            for (auto& v : d) v = (sign(rng) ? -1 : 1) * mag(rng);
            ++trials;
            equal += std::abs(eval::wilcoxon_signed_rank(d).p_value - enumerate_p(d)) <= 1e-12;
        }
    return {units && equal == trials, fmt("unit cases %s; exact p equals enumeration %d/%d (n = 5..12)",
                                          units ? "exact" : "wrong", equal, trials)};
}

// 12-14. End-to-end runs on the phantom suite.
struct Ablation {
    pipeline::PipelineConfig config;
    std::vector<pipeline::CaseData> train, test;
    pipeline::Models models;
    double train_seconds = 0.0;
    double clean_seconds = 0.0;
    std::array<double, 5> stage_dice{};
    std::vector<std::string> final_hashes;
};

constexpr std::uint64_t kMasterSeed = 20240;
constexpr std::size_t kTrainCases = 8;
constexpr std::size_t kTestCases = 20;

std::vector<pipeline::CaseData> suite(std::size_t n, std::uint64_t seed, const std::string& prefix) {
    std::vector<pipeline::CaseData> out;
    const auto specs = phantom::phantom_suite(n, seed);
    for (std::size_t i = 0; i < specs.size(); ++i)
        out.push_back(pipeline::case_from_phantom(phantom::generate_phantom(specs[i]), prefix + std::to_string(i)));
    return out;
}

double mean_dice(const pipeline::SuiteResult& r) { return r.report.dice.mean; }

Ablation& ablation() {
    static std::optional<Ablation> a;
    if (a) return *a;
    a.emplace();
    a->config.seed = kMasterSeed;
    const auto t0 = Clock::now();
    a->train = suite(kTrainCases, stream_seed(kMasterSeed, "acceptance.train"), "train");
    a->test = suite(kTestCases, stream_seed(kMasterSeed, "acceptance.test"), "test");
    a->models = pipeline::train_models(a->train, a->config);
    a->train_seconds = seconds_since(t0);

    const auto t1 = Clock::now();
    // Cumulative stage additions, each run with the later stages off.
    for (int k = 0; k < 5; ++k) {
        auto c = a->config;
        c.stages = {k >= 1, k >= 2, k >= 3, k >= 4};
        const auto r = pipeline::run_suite(a->test, c, a->models);
        a->stage_dice[k] = mean_dice(r);
        if (k == 4)
            for (const auto& cr : r.cases) a->final_hashes.push_back(pipeline::mask_hash(cr.mask));
    }
    a->clean_seconds = seconds_since(t1);
    return *a;
}

Outcome ablation_ordering(double& elapsed) {
    auto& a = ablation();
    elapsed = a.train_seconds + a.clean_seconds;
    bool increasing = true;
    for (int k = 1; k < 5; ++k) increasing &= a.stage_dice[k] > a.stage_dice[k - 1];
    return {increasing && a.stage_dice[4] >= 0.90,
            fmt("mean Dice binarize %.4f, +morph %.4f, +temporal %.4f, +radiomics %.4f, +cnn %.4f (train %.0f s)",
                a.stage_dice[0], a.stage_dice[1], a.stage_dice[2], a.stage_dice[3], a.stage_dice[4], a.train_seconds)};
}

Outcome robustness(double& elapsed) {
    auto& a = ablation();
    const auto t0 = Clock::now();
    double worst_drop = -1.0;
    std::string parts;
    for (double scale : {0.9, 1.1}) {
        auto cases = a.test;
        for (std::size_t i = 0; i < cases.size(); ++i)
            cases[i].ct = phantom::perturb(a.test[i].ct, 10.0, scale,
                                           stream_seed(kMasterSeed, "acceptance.perturb", {i, scale > 1.0 ? 1u : 0u}));
        const double d = mean_dice(pipeline::run_suite(cases, a.config, a.models));
        worst_drop = std::max(worst_drop, a.stage_dice[4] - d);
        parts += fmt(" scale %.1f: %.4f;", scale, d);
    }
    elapsed = a.train_seconds + a.clean_seconds + seconds_since(t0);
    return {worst_drop < 0.02, fmt("clean %.4f;%s worst drop %.4f", a.stage_dice[4], parts.c_str(), worst_drop)};
}

Outcome determinism() {
    auto& a = ablation();
    // Same models, repeated run and a different worker count.
    auto c = a.config;
    c.workers = 3;
    const auto r3 = pipeline::run_suite(a.test, c, a.models);
    std::size_t same_workers = 0;
    for (std::size_t i = 0; i < r3.cases.size(); ++i) same_workers += pipeline::mask_hash(r3.cases[i].mask) == a.final_hashes[i];
    const std::vector<pipeline::CaseData> few(a.test.begin(), a.test.begin() + 5);
    const auto r1 = pipeline::run_suite(few, a.config, a.models);
    std::size_t same_repeat = 0;
    for (std::size_t i = 0; i < r1.cases.size(); ++i) same_repeat += pipeline::mask_hash(r1.cases[i].mask) == a.final_hashes[i];

    // Training from scratch with one and three workers, twice each.
    auto small = a.config;
    small.augment.copies = 1;
    small.cnn.patches_per_case = 300;
    small.cnn.adam_epochs = 2;
    small.cnn.sgd_epochs = 1;
    small.radiomics.n_trees = 60;
    const std::vector<pipeline::CaseData> tr(a.train.begin(), a.train.begin() + 3);
    std::vector<std::string> runs;
    for (int workers : {1, 3, 1}) {
        small.workers = workers;
        const auto m = pipeline::train_models(tr, small);
        const auto r = pipeline::run_suite(few, small, m);
        std::string sig = m.forest->to_json();
        sig += std::to_string(pipeline::fnv1a(std::string(reinterpret_cast<const char*>(m.cnn->params().data()),
                                                          m.cnn->params().size() * sizeof(double))));
        for (const auto& cr : r.cases)
            for (const auto& s : cr.stages) sig += pipeline::mask_hash(s.mask);
        runs.push_back(std::move(sig));
    }
    const bool trained_same = runs[0] == runs[1] && runs[0] == runs[2];
    return {same_workers == r3.cases.size() && same_repeat == r1.cases.size() && trained_same,
            fmt("3 workers %zu/%zu masks identical; repeat %zu/%zu; retraining with 1/3/1 workers %s", same_workers,
                r3.cases.size(), same_repeat, r1.cases.size(), trained_same ? "identical" : "differs")};
}

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;  // 0 = no runtime limit
    std::function<Outcome(double&)> run;
};

auto timed(std::function<Outcome()> f) {
    return [f](double& elapsed) {
        const auto t0 = Clock::now();
        auto o = f();
        elapsed = seconds_since(t0);
        return o;
    };
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria{
        {1, "otsu_oracle", 5, timed(otsu_oracle)},
        {2, "speck_removal", 30, timed(speck_removal)},
        {3, "temporal_rule", 0, timed(temporal_rule)},
        {4, "feature_contract", 0, timed(feature_contract)},
        {5, "haar_wavelet", 0, timed(haar)},
        {6, "signed_edt", 0, timed(edt)},
        {7, "forest_blobs", 60, timed(forest_blobs)},
        {8, "feature_selection", 300, timed(featsel_recovery)},
        {9, "cnn_sphere", 600, timed(cnn_sphere)},
        {10, "pixel_shuffle", 0, timed(pixel_shuffle)},
        {11, "metrics_wilcoxon", 0, timed(metrics_and_wilcoxon)},
        {12, "ablation_ordering", 1200, ablation_ordering},
        {13, "robustness", 1200, robustness},
        {14, "determinism", 0, timed(determinism)},
    };
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
    int failed = 0;
    for (const auto& c : criteria) {
        if (!wanted.empty() && !wanted.count(c.id)) continue;
        double elapsed = 0.0;
        Outcome o;
        try {
            o = c.run(elapsed);
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const bool in_time = c.budget_seconds <= 0 || elapsed < c.budget_seconds;
        const bool pass = o.pass && in_time;
        failed += !pass;
        std::string budget = c.budget_seconds > 0 ? fmt(" of %.0f s", c.budget_seconds) : std::string();
        std::printf("criterion %2d %-18s %s  %s [%.1f s%s]\n", c.id, c.name, pass ? "PASS" : "FAIL", o.detail.c_str(),
                    elapsed, budget.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
