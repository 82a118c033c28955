#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

#include "livseg/core/rng.hpp"
#include "livseg/ensemble/forest.hpp"
#include "livseg/ensemble/gbdt.hpp"
#include "livseg/featsel/featsel.hpp"

namespace livseg::featsel {

std::string_view strategy_tag(Strategy s) {
    switch (s) {
    case Strategy::Rfe: return "RFE";
    case Strategy::Lasso: return "LASSO";
    case Strategy::RfImportance: return "RF-IMP";
    case Strategy::XgbGain: return "XGB-GAIN";
    case Strategy::GbdtFrequency: return "GBDT-FREQ";
    case Strategy::ReliefF: return "RELIEFF";
    }
    return "?";
}

Strategy strategy_from_tag(std::string_view tag) {
    for (auto s : kAllStrategies)
        if (strategy_tag(s) == tag) return s;
    throw InvalidArgument("unknown selection strategy '" + std::string(tag) + "'");
}

namespace {

// Order by descending score, then ascending index.
FeatureRanking by_score(Strategy s, const std::vector<double>& score) {
    FeatureRanking r;
    r.strategy = s;
    r.order.resize(score.size());
    std::iota(r.order.begin(), r.order.end(), 0);
    std::stable_sort(r.order.begin(), r.order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    for (auto i : r.order) r.scores.push_back(score[i]);
    return r;
}

ensemble::ForestParams forest_params(int trees, std::uint64_t seed, int workers) {
    ensemble::ForestParams p;
    p.n_trees = trees;
    p.seed = seed;
    p.workers = workers;
    return p;
}

FeatureRanking rank_rfe(const Matrix& x, std::span<const int> y, std::uint64_t seed, const RankingOptions& o) {
    const std::size_t d = x.cols();
    std::vector<std::size_t> alive(d);
    std::iota(alive.begin(), alive.end(), 0);
    // score = elimination round + importance within that round, so later
    // survivors always outrank earlier casualties.
    std::vector<double> score(d, 0.0);
    for (int round = 0;; ++round) {
        const Matrix sub = x.select_columns(alive);
        const auto model = ensemble::train_forest(sub, y, forest_params(o.rfe_trees, stream_seed(seed, "rfe", {static_cast<std::uint64_t>(round)}), o.workers));
        const auto imp = ensemble::forest_importance(model);
        for (std::size_t k = 0; k < alive.size(); ++k) score[alive[k]] = round + imp[k];
        if (alive.size() <= o.keep) break;
        std::vector<std::size_t> idx(alive.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return imp[a] < imp[b] || (imp[a] == imp[b] && alive[a] > alive[b]); });
        const auto drop = std::max<std::size_t>(1, static_cast<std::size_t>(o.rfe_drop_fraction * static_cast<double>(alive.size())));
        std::vector<bool> gone(alive.size(), false);
        for (std::size_t k = 0; k < drop; ++k) gone[idx[k]] = true;
        std::vector<std::size_t> next;
        for (std::size_t k = 0; k < alive.size(); ++k)
            if (!gone[k]) next.push_back(alive[k]);
        alive = std::move(next);
    }
    return by_score(Strategy::Rfe, score);
}

FeatureRanking rank_lasso(const Matrix& x, std::span<const int> y, const RankingOptions& o) {
    const std::size_t n = x.rows(), d = x.cols();
    const double dn = static_cast<double>(n);
    // Centre and scale columns and centre the +/-1 target, which absorbs the
    // intercept.
    Matrix z(n, d);
    std::vector<double> col_sq(d, 0.0);
    for (std::size_t c = 0; c < d; ++c) {
        double m = 0.0;
        for (std::size_t r = 0; r < n; ++r) m += x(r, c);
        m /= dn;
        double v = 0.0;
        for (std::size_t r = 0; r < n; ++r) v += (x(r, c) - m) * (x(r, c) - m);
        const double sd = std::sqrt(v / dn);
        for (std::size_t r = 0; r < n; ++r) z(r, c) = sd > 0.0 ? (x(r, c) - m) / sd : 0.0;
        for (std::size_t r = 0; r < n; ++r) col_sq[c] += z(r, c) * z(r, c);
        col_sq[c] /= dn;
    }
    std::vector<double> t(n);
    double tm = 0.0;
    for (std::size_t r = 0; r < n; ++r) tm += t[r] = y[r] ? 1.0 : -1.0;
    tm /= dn;
    for (auto& v : t) v -= tm;

    std::vector<double> corr(d, 0.0);
    double lambda_max = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
        for (std::size_t r = 0; r < n; ++r) corr[c] += z(r, c) * t[r];
        corr[c] = std::abs(corr[c] / dn);
        lambda_max = std::max(lambda_max, corr[c]);
    }

    std::vector<double> beta(d, 0.0), resid = t, entry(d, 0.0), chosen(d, 0.0);
    bool have_choice = false;
    const int grid = std::max(2, o.lasso_grid);
    for (int g = 0; g < grid; ++g) {
        const double lambda = lambda_max * std::pow(o.lasso_min_ratio, static_cast<double>(g) / (grid - 1));
        for (int sweep = 0; sweep < 1000; ++sweep) {
            double max_change = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                if (col_sq[c] == 0.0) continue;
                double rho = 0.0;
                for (std::size_t r = 0; r < n; ++r) rho += z(r, c) * resid[r];
                rho = rho / dn + col_sq[c] * beta[c];
                const double nb = (rho > lambda ? rho - lambda : rho < -lambda ? rho + lambda : 0.0) / col_sq[c];
                const double delta = nb - beta[c];
                if (delta != 0.0) {
                    for (std::size_t r = 0; r < n; ++r) resid[r] -= delta * z(r, c);
                    beta[c] = nb;
                    max_change = std::max(max_change, std::abs(delta));
                }
            }
            if (max_change < 1e-8) break;
        }
        std::size_t nonzero = 0;
        for (std::size_t c = 0; c < d; ++c)
            if (beta[c] != 0.0) {
                ++nonzero;
                if (entry[c] == 0.0) entry[c] = lambda;
            }
        if (nonzero <= o.keep) {
            chosen = beta;
            have_choice = true;
        }
    }
    if (!have_choice) chosen.assign(d, 0.0);

    // Rank: support by |beta|, then by the lambda at which each feature first
    // entered the path, then by marginal correlation.
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    auto key = [&](std::size_t c) { return std::tuple(std::abs(chosen[c]), entry[c], corr[c]); };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) > key(b); });
    FeatureRanking r;
    r.strategy = Strategy::Lasso;
    r.order = order;
    for (auto c : order) r.scores.push_back(std::abs(chosen[c]));
    return r;
}

FeatureRanking rank_relief(const Matrix& x, std::span<const int> y, const RankingOptions& o) {
    const std::size_t n = x.rows(), d = x.cols();
    const Matrix z = fit_standardize(x).apply(x);
    std::vector<double> range(d, 0.0);
    for (std::size_t c = 0; c < d; ++c) {
        double lo = z(0, c), hi = z(0, c);
        for (std::size_t r = 1; r < n; ++r) {
            lo = std::min(lo, z(r, c));
            hi = std::max(hi, z(r, c));
        }
        range[c] = hi > lo ? hi - lo : 1.0;
    }
    std::vector<double> w(d, 0.0);
    std::vector<std::pair<double, std::size_t>> hits, misses;
    for (std::size_t i = 0; i < n; ++i) {
        hits.clear();
        misses.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double dist = 0.0;
            for (std::size_t c = 0; c < d; ++c) dist += std::abs(z(i, c) - z(j, c));
            (y[j] == y[i] ? hits : misses).push_back({dist, j});
        }
        const std::size_t kh = std::min<std::size_t>(o.relief_k, hits.size());
        const std::size_t km = std::min<std::size_t>(o.relief_k, misses.size());
        std::partial_sort(hits.begin(), hits.begin() + kh, hits.end());
        std::partial_sort(misses.begin(), misses.begin() + km, misses.end());
        for (std::size_t c = 0; c < d; ++c) {
            double h = 0.0, m = 0.0;
            for (std::size_t k = 0; k < kh; ++k) h += std::abs(z(i, c) - z(hits[k].second, c)) / range[c];
            for (std::size_t k = 0; k < km; ++k) m += std::abs(z(i, c) - z(misses[k].second, c)) / range[c];
            if (kh) w[c] -= h / static_cast<double>(kh * n);
            if (km) w[c] += m / static_cast<double>(km * n);
        }
    }
    return by_score(Strategy::ReliefF, w);
}

} // namespace

FeatureRanking rank_features(const Matrix& x, std::span<const int> y, Strategy strategy, std::uint64_t seed,
                             const RankingOptions& o) {
    ensemble::check_binary_labels(y, x.rows());
    if (x.cols() == 0) throw InvalidArgument("rank_features: no features");
    const std::uint64_t s = stream_seed(seed, strategy_tag(strategy));
    switch (strategy) {
    case Strategy::Rfe: return rank_rfe(x, y, s, o);
    case Strategy::Lasso: return rank_lasso(x, y, o);
    case Strategy::RfImportance: {
        const auto m = ensemble::train_forest(x, y, forest_params(o.forest_trees, s, o.workers));
        return by_score(strategy, ensemble::forest_importance(m));
    }
    case Strategy::XgbGain:
    case Strategy::GbdtFrequency: {
        ensemble::GbdtParams p;
        p.rounds = o.gbdt_rounds;
        p.seed = s;
        const auto imp = ensemble::gbdt_importances(ensemble::train_gbdt(x, y, p));
        return by_score(strategy, strategy == Strategy::XgbGain ? imp.gain : imp.frequency);
    }
    case Strategy::ReliefF: return rank_relief(x, y, o);
    }
    throw InvalidArgument("rank_features: unknown strategy");
}

SelectedSubset select_stable(std::span<const FeatureRanking> rankings, std::size_t top_k, std::size_t target) {
    if (rankings.empty()) throw InvalidArgument("select_stable: no rankings");
    const std::size_t d = rankings[0].order.size();
    for (const auto& r : rankings)
        if (r.order.size() != d) throw InvalidArgument("select_stable: rankings cover different feature spaces");

    SelectedSubset out;
    out.mean_rank.assign(d, 0.0);
    std::vector<int> votes(d, 0);
    for (const auto& r : rankings) {
        for (std::size_t pos = 0; pos < d; ++pos) out.mean_rank[r.order[pos]] += static_cast<double>(pos);
        std::vector<std::size_t> top(r.order.begin(), r.order.begin() + std::min(top_k, d));
        std::sort(top.begin(), top.end());
        for (auto i : top) ++votes[i];
        out.top_sets.push_back(std::move(top));
    }
    for (auto& m : out.mean_rank) m /= static_cast<double>(rankings.size());
    for (std::size_t i = 0; i < d; ++i)
        if (votes[i] == static_cast<int>(rankings.size())) out.intersection.push_back(i);

    auto better = [&](std::size_t a, std::size_t b) {
        return out.mean_rank[a] < out.mean_rank[b] || (out.mean_rank[a] == out.mean_rank[b] && a < b);
    };
    std::vector<std::size_t> inter = out.intersection;
    std::sort(inter.begin(), inter.end(), better);
    if (inter.size() >= target) {
        inter.resize(target);
    } else {
        std::vector<std::size_t> rest;
        for (std::size_t i = 0; i < d; ++i)
            if (votes[i] != static_cast<int>(rankings.size())) rest.push_back(i);
        std::sort(rest.begin(), rest.end(), better);
        for (std::size_t k = 0; k < rest.size() && inter.size() < target; ++k) inter.push_back(rest[k]);
        std::sort(inter.begin(), inter.end(), better);
    }
    out.indices = std::move(inter);
    return out;
}

std::string to_json(std::span<const FeatureRanking> rankings, const SelectedSubset& subset) {
    nlohmann::ordered_json j;
    j["format"] = "livseg.feature_selection";
    j["version"] = 1;
    auto& arr = j["rankings"] = nlohmann::ordered_json::array();
    for (const auto& r : rankings)
        arr.push_back({{"strategy", strategy_tag(r.strategy)}, {"indices", r.order}, {"scores", r.scores}});
    j["top_sets"] = subset.top_sets;
    j["intersection"] = subset.intersection;
    j["selected"] = subset.indices;
    return j.dump(1) + "\n";
}

} // namespace livseg::featsel
