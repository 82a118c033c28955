#pragma once

#include <span>
#include <vector>

namespace livseg::neural {

struct LossParams {
    double lambda_dice = 0.7;
    double lambda_bce = 0.3;
    double w_liver = 1.0;
    double w_tumor = 2.0;
    double eps = 1e-5;

    void validate() const;
};

struct SegLossResult {
    double loss = 0.0;
    double dice_liver = 0.0;  // soft Dice loss, 1 - Dice
    double dice_tumor = 0.0;
    double bce_liver = 0.0;   // mean BCE, logs clamped to [1e-12, 1 - 1e-12]
    double bce_tumor = 0.0;
    std::vector<double> grad_liver;  // dL / dp per voxel
    std::vector<double> grad_tumor;
};

/// Weighted sum over the two classes of lambda_dice * Dice + lambda_bce * BCE.
SegLossResult seg_loss(std::span<const double> p_liver, std::span<const double> p_tumor,
                       std::span<const double> t_liver, std::span<const double> t_tumor,
                       const LossParams& params = {});

} // namespace livseg::neural
