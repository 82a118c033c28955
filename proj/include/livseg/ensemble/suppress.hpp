#pragma once

#include <span>
#include <string>
#include <vector>

#include "livseg/ensemble/forest.hpp"
#include "livseg/radiomics/region.hpp"

namespace livseg::ensemble {

inline constexpr double kDefaultTauRf = 0.5;

struct SuppressionResult {
    std::vector<double> q;         // forest probability per region
    std::vector<bool> keep;        // q >= tau
    std::vector<radiomics::CandidateRegion> kept;
    volumes::Mask3D mask;          // input mask with rejected regions cleared
};

/// Scores every candidate on its selected features (one row per region,
/// columns named by `feature_names`) and clears regions with q < tau.
/// Throws InvalidArgument when the names differ from the model's.
SuppressionResult suppress_false_positives(const volumes::Mask3D& mask,
                                           std::span<const radiomics::CandidateRegion> regions,
                                           const Matrix& features, const std::vector<std::string>& feature_names,
                                           const ForestModel& model, double tau = kDefaultTauRf);

} // namespace livseg::ensemble
