#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "livseg/core/matrix.hpp"
#include "livseg/core/rng.hpp"

namespace livseg::ensemble {

/// Node of a flat binary tree. Internal nodes send x[feature] <= threshold
/// to `left`; leaves (feature < 0) carry `value`.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    double gain = 0.0;   // impurity decrease (CART) or loss reduction (boosting)
    double weight = 0.0; // total sample weight reaching the node
    int samples = 0;
    int depth = 0;

    bool is_leaf() const noexcept { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class Tree {
public:
    std::vector<TreeNode> nodes;

    std::size_t leaf_of(std::span<const double> x) const;
    double predict(std::span<const double> x) const { return nodes[leaf_of(x)].value; }
    int depth() const;

    friend bool operator==(const Tree&, const Tree&) = default;
};

struct TreeParams {
    int max_depth = 16;
    int min_samples_leaf = 10;
    int max_features = 0; // 0: floor(sqrt(d)), at least 1
};

/// Weighted-Gini CART on `rows` (duplicates allowed, as in a bootstrap).
/// Leaf values are the weighted fraction of class 1.
Tree fit_classification_tree(const Matrix& x, std::span<const int> y, std::span<const std::size_t> rows,
                             const double class_weight[2], const TreeParams& params, Rng& rng);

struct BoostTreeParams {
    int max_depth = 3;
    double lambda = 1.0;
    double min_child_weight = 1.0;
};

/// Second-order regression tree on gradients/hessians; leaf value
/// -G / (H + lambda).
Tree fit_newton_tree(const Matrix& x, std::span<const double> grad, std::span<const double> hess,
                     const BoostTreeParams& params);

} // namespace livseg::ensemble
