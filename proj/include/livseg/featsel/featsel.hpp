#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "livseg/core/matrix.hpp"

namespace livseg::featsel {

inline constexpr double kStdFloor = 1e-12;

struct StandardizationParams {
    std::vector<double> mean;
    std::vector<double> std; // population std, floored at kStdFloor

    Matrix apply(const Matrix& x) const;
};

/// Column statistics of `train` only. Throws InvalidArgument for < 2 rows.
StandardizationParams fit_standardize(const Matrix& train);

struct Standardized {
    StandardizationParams params;
    Matrix train;
    std::vector<Matrix> others;
};
Standardized fit_apply_standardize(const Matrix& train, std::span<const Matrix> others = {});

/// Columns whose population variance is >= eps.
std::vector<std::size_t> drop_near_zero_variance(const Matrix& x, double eps = 1e-8);

double pearson(std::span<const double> a, std::span<const double> b);

/// Sample distance correlation (V-statistic, double-centred distances),
/// computed exactly in O(n log n). 0 when either variable is constant.
double distance_correlation(std::span<const double> a, std::span<const double> b);

/// Greedy scan in column order: a column is dropped when |Pearson| or dCor
/// with any earlier kept column exceeds its threshold. Returns kept columns.
std::vector<std::size_t> drop_correlated(const Matrix& x, double pearson_max = 0.95, double dcor_max = 0.95);

enum class Strategy { Rfe, Lasso, RfImportance, XgbGain, GbdtFrequency, ReliefF };
inline constexpr Strategy kAllStrategies[] = {Strategy::Rfe,     Strategy::Lasso,         Strategy::RfImportance,
                                              Strategy::XgbGain, Strategy::GbdtFrequency, Strategy::ReliefF};

std::string_view strategy_tag(Strategy s);
Strategy strategy_from_tag(std::string_view tag);

struct FeatureRanking {
    Strategy strategy = Strategy::Rfe;
    std::vector<std::size_t> order; // column indices, best first
    std::vector<double> scores;     // aligned with order; larger is better
};

struct RankingOptions {
    int forest_trees = 350;   // RF-IMP
    int rfe_trees = 100;      // per RFE round
    double rfe_drop_fraction = 0.10;
    std::size_t keep = 30;    // RFE stop size and Lasso support limit
    int lasso_grid = 50;
    double lasso_min_ratio = 1e-3;
    int gbdt_rounds = 200;
    int relief_k = 10;
    int workers = 1;
};

/// Throws InvalidArgument unless y is binary with both classes present.
FeatureRanking rank_features(const Matrix& x, std::span<const int> y, Strategy strategy, std::uint64_t seed,
                             const RankingOptions& options = {});

struct SelectedSubset {
    std::vector<std::size_t> indices;      // adjusted set, best mean rank first
    std::vector<std::vector<std::size_t>> top_sets;
    std::vector<std::size_t> intersection; // ascending
    std::vector<double> mean_rank;         // per column, 0-based positions averaged over strategies
};

/// Intersects the top-k sets and pads or trims by mean rank to `target`.
SelectedSubset select_stable(std::span<const FeatureRanking> rankings, std::size_t top_k = 30,
                             std::size_t target = 20);

std::string to_json(std::span<const FeatureRanking> rankings, const SelectedSubset& subset);

} // namespace livseg::featsel
