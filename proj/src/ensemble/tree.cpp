#include "livseg/ensemble/tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace livseg::ensemble {

std::size_t Tree::leaf_of(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return i;
}

int Tree::depth() const {
    int d = 0;
    for (const auto& n : nodes) d = std::max(d, n.depth);
    return d;
}

namespace {

double midpoint(double a, double b) {
    const double t = a + (b - a) / 2.0;
    return t < b ? t : a;
}

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

// Shared recursive builder. `Stats` accumulates per-sample statistics and
// scores a partition; the builder handles ordering and tie-breaking.
template <class Stats, class ScoreFn, class LeafFn, class FeatureFn>
class Builder {
public:
    Builder(const Matrix& x, Tree& tree, int max_depth, int min_leaf, double min_child_weight, ScoreFn score,
            LeafFn leaf, FeatureFn features, std::function<Stats(std::size_t)> stat_of)
        : x_(x), tree_(tree), max_depth_(max_depth), min_leaf_(min_leaf), min_child_weight_(min_child_weight),
          score_(score), leaf_(leaf), features_(features), stat_of_(std::move(stat_of)) {}

    int build(std::vector<std::size_t>& rows, int depth) {
        Stats total{};
        for (auto r : rows) total += stat_of_(r);
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        {
            auto& n = tree_.nodes[id];
            n.value = leaf_(total);
            n.weight = total.weight();
            n.samples = static_cast<int>(rows.size());
            n.depth = depth;
        }
        if (depth >= max_depth_ || static_cast<int>(rows.size()) < 2 * min_leaf_ || total.pure()) return id;

        Split best;
        std::vector<std::pair<double, std::size_t>> order(rows.size());
        for (int f : features_()) {
            for (std::size_t i = 0; i < rows.size(); ++i) order[i] = {x_(rows[i], f), rows[i]};
            std::sort(order.begin(), order.end());
            Stats left{};
            for (std::size_t i = 0; i + 1 < order.size(); ++i) {
                left += stat_of_(order[i].second);
                const auto nl = static_cast<int>(i + 1);
                const auto nr = static_cast<int>(order.size()) - nl;
                if (order[i].first == order[i + 1].first || nl < min_leaf_ || nr < min_leaf_) continue;
                const Stats right = total - left;
                if (left.weight() < min_child_weight_ || right.weight() < min_child_weight_) continue;
                const double gain = score_(left, right, total);
                if (gain > best.gain) {
                    best = {f, midpoint(order[i].first, order[i + 1].first), gain};
                }
            }
        }
        if (best.feature < 0 || !(best.gain > 1e-12 * std::max(1.0, total.weight()))) return id;

        std::vector<std::size_t> lrows, rrows;
        for (auto r : rows) (x_(r, best.feature) <= best.threshold ? lrows : rrows).push_back(r);
        rows.clear();
        rows.shrink_to_fit();
        const int l = build(lrows, depth + 1);
        const int r = build(rrows, depth + 1);
        auto& n = tree_.nodes[id];
        n.feature = best.feature;
        n.threshold = best.threshold;
        n.gain = best.gain;
        n.left = l;
        n.right = r;
        return id;
    }

private:
    const Matrix& x_;
    Tree& tree_;
    int max_depth_;
    int min_leaf_;
    double min_child_weight_;
    ScoreFn score_;
    LeafFn leaf_;
    FeatureFn features_;
    std::function<Stats(std::size_t)> stat_of_;
};

struct ClassStats {
    double w0 = 0.0, w1 = 0.0;
    ClassStats& operator+=(const ClassStats& o) {
        w0 += o.w0;
        w1 += o.w1;
        return *this;
    }
    ClassStats operator-(const ClassStats& o) const { return {w0 - o.w0, w1 - o.w1}; }
    double weight() const { return w0 + w1; }
    bool pure() const { return w0 <= 0.0 || w1 <= 0.0; }
    double purity() const { // sum of squared masses over total; Gini = 1 - purity / W
        const double w = weight();
        return w > 0.0 ? (w0 * w0 + w1 * w1) / w : 0.0;
    }
};

struct GradStats {
    double g = 0.0, h = 0.0;
    GradStats& operator+=(const GradStats& o) {
        g += o.g;
        h += o.h;
        return *this;
    }
    GradStats operator-(const GradStats& o) const { return {g - o.g, h - o.h}; }
    double weight() const { return h; }
    bool pure() const { return false; }
};

} // namespace

Tree fit_classification_tree(const Matrix& x, std::span<const int> y, std::span<const std::size_t> rows,
                             const double class_weight[2], const TreeParams& params, Rng& rng) {
    const int d = static_cast<int>(x.cols());
    int mtry = params.max_features > 0 ? params.max_features : static_cast<int>(std::sqrt(static_cast<double>(d)));
    mtry = std::clamp(mtry, 1, d);
    std::vector<int> all(d);
    std::iota(all.begin(), all.end(), 0);

    auto features = [&]() {
        if (mtry == d) return all;
        // Partial Fisher-Yates draw, then ascending order for tie-breaking.
        std::vector<int> pool = all;
        for (int i = 0; i < mtry; ++i) {
            std::uniform_int_distribution<int> pick(i, d - 1);
            std::swap(pool[i], pool[pick(rng)]);
        }
        pool.resize(mtry);
        std::sort(pool.begin(), pool.end());
        return pool;
    };
    auto score = [](const ClassStats& l, const ClassStats& r, const ClassStats& t) {
        return l.purity() + r.purity() - t.purity();
    };
    auto leaf = [](const ClassStats& s) { return s.weight() > 0.0 ? s.w1 / s.weight() : 0.0; };
    auto stat_of = [&](std::size_t r) {
        return y[r] == 1 ? ClassStats{0.0, class_weight[1]} : ClassStats{class_weight[0], 0.0};
    };

    Tree tree;
    Builder<ClassStats, decltype(score), decltype(leaf), decltype(features)> b(
        x, tree, params.max_depth, params.min_samples_leaf, 0.0, score, leaf, features, stat_of);
    std::vector<std::size_t> r(rows.begin(), rows.end());
    b.build(r, 0);
    return tree;
}

Tree fit_newton_tree(const Matrix& x, std::span<const double> grad, std::span<const double> hess,
                     const BoostTreeParams& params) {
    const int d = static_cast<int>(x.cols());
    std::vector<int> all(d);
    std::iota(all.begin(), all.end(), 0);
    const double lambda = params.lambda;
    auto features = [&]() { return all; };
    auto obj = [lambda](const GradStats& s) { return s.g * s.g / (s.h + lambda); };
    auto score = [obj](const GradStats& l, const GradStats& r, const GradStats& t) {
        return 0.5 * (obj(l) + obj(r) - obj(t));
    };
    auto leaf = [lambda](const GradStats& s) { return -s.g / (s.h + lambda); };
    auto stat_of = [&](std::size_t r) { return GradStats{grad[r], hess[r]}; };

    Tree tree;
    Builder<GradStats, decltype(score), decltype(leaf), decltype(features)> b(x, tree, params.max_depth, 1,
                                                                               params.min_child_weight, score, leaf,
                                                                               features, stat_of);
    std::vector<std::size_t> rows(x.rows());
    std::iota(rows.begin(), rows.end(), 0);
    b.build(rows, 0);
    return tree;
}

} // namespace livseg::ensemble
