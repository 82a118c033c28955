#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "livseg/ensemble/tree.hpp"

namespace livseg::ensemble {

struct ForestParams {
    int n_trees = 350;
    TreeParams tree;
    bool balanced_class_weight = true;
    std::uint64_t seed = 0;
    int workers = 1;
};

class ForestModel {
public:
    std::vector<Tree> trees;
    std::size_t n_features = 0;
    double class_weight[2] = {1.0, 1.0};
    std::vector<std::string> feature_names; // optional, checked at prediction time

    /// Mean of per-tree leaf probabilities. Throws InvalidArgument on a
    /// length mismatch.
    double predict_proba(std::span<const double> x) const;
    std::vector<double> predict_proba(const Matrix& x, int workers = 1) const;

    std::string to_json() const;
    static ForestModel from_json(const std::string& text);

    friend bool operator==(const ForestModel& a, const ForestModel& b) {
        return a.trees == b.trees && a.n_features == b.n_features && a.class_weight[0] == b.class_weight[0] &&
               a.class_weight[1] == b.class_weight[1] && a.feature_names == b.feature_names;
    }
};

/// Labels must be 0/1 with both classes present; otherwise InvalidArgument.
void check_binary_labels(std::span<const int> y, std::size_t rows);

/// Bagged CART forest; each tree draws its bootstrap and feature subsets
/// from its own stream, so results do not depend on `workers`.
ForestModel train_forest(const Matrix& x, std::span<const int> y, const ForestParams& params);

/// Mean decrease in impurity, normalised per tree, averaged over trees and
/// normalised to sum 1 (all zeros if no tree ever split).
std::vector<double> forest_importance(const ForestModel& model);

} // namespace livseg::ensemble
