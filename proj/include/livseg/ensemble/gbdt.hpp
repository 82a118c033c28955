#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "livseg/ensemble/tree.hpp"

namespace livseg::ensemble {

struct GbdtParams {
    int rounds = 200;
    double learning_rate = 0.1;
    BoostTreeParams tree;
    std::uint64_t seed = 0; // the learner is deterministic; kept for interface symmetry
};

class GbdtModel {
public:
    double base_score = 0.0; // prior log-odds
    double learning_rate = 0.1;
    std::vector<Tree> stages;
    std::size_t n_features = 0;
    std::vector<double> train_loss; // mean logistic loss after each round (index 0: prior only)

    double decision(std::span<const double> x) const;
    double predict_proba(std::span<const double> x) const;

    std::string to_json() const;
    static GbdtModel from_json(const std::string& text);
};

/// Logistic-loss boosting with Newton leaf values.
GbdtModel train_gbdt(const Matrix& x, std::span<const int> y, const GbdtParams& params);

struct GbdtImportance {
    std::vector<double> gain;      // total split gain per feature, normalised to sum 1
    std::vector<double> frequency; // split count per feature, normalised to sum 1
};
GbdtImportance gbdt_importances(const GbdtModel& model);

} // namespace livseg::ensemble
