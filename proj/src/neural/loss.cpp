#include "livseg/neural/loss.hpp"

#include <algorithm>
#include <cmath>

#include "livseg/core/error.hpp"

namespace livseg::neural {

namespace {

constexpr double kLo = 1e-12;
constexpr double kHi = 1.0 - 1e-12;

struct ClassTerms {
    double dice = 0.0;
    double bce = 0.0;
};

// Adds weight * (lambda_dice * dDice + lambda_bce * dBCE) to grad.
ClassTerms class_terms(std::span<const double> p, std::span<const double> t, const LossParams& lp, double weight,
                       std::vector<double>& grad) {
    const std::size_t n = p.size();
    double inter = 0.0, sum = 0.0, bce = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        inter += p[i] * t[i];
        sum += p[i] + t[i];
        const double pc = std::clamp(p[i], kLo, kHi);
        bce -= t[i] * std::log(pc) + (1.0 - t[i]) * std::log(1.0 - pc);
    }
    const double den = sum + lp.eps;
    const double num = 2.0 * inter + lp.eps;
    const double inv_n = 1.0 / static_cast<double>(n);
    grad.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double d_dice = -(2.0 * t[i] * den - num) / (den * den);
        double d_bce = 0.0;
        if (p[i] > kLo && p[i] < kHi) d_bce = -inv_n * (t[i] / p[i] - (1.0 - t[i]) / (1.0 - p[i]));
        grad[i] = weight * (lp.lambda_dice * d_dice + lp.lambda_bce * d_bce);
    }
    return {1.0 - num / den, bce * inv_n};
}

} // namespace

void LossParams::validate() const {
    if (lambda_dice < 0.0 || lambda_bce < 0.0) throw InvalidArgument("loss weights must be non-negative");
    if (!(eps > 0.0)) throw InvalidArgument("Dice smoothing must be positive");
}

SegLossResult seg_loss(std::span<const double> p_liver, std::span<const double> p_tumor,
                       std::span<const double> t_liver, std::span<const double> t_tumor, const LossParams& params) {
    params.validate();
    const std::size_t n = p_liver.size();
    if (n == 0) throw InvalidArgument("seg_loss: empty prediction");
    if (p_tumor.size() != n || t_liver.size() != n || t_tumor.size() != n)
        throw InvalidArgument("seg_loss: prediction and target sizes differ");
    SegLossResult r;
    const auto liver = class_terms(p_liver, t_liver, params, params.w_liver, r.grad_liver);
    const auto tumor = class_terms(p_tumor, t_tumor, params, params.w_tumor, r.grad_tumor);
    r.dice_liver = liver.dice;
    r.dice_tumor = tumor.dice;
    r.bce_liver = liver.bce;
    r.bce_tumor = tumor.bce;
    r.loss = params.w_liver * (params.lambda_dice * liver.dice + params.lambda_bce * liver.bce) +
             params.w_tumor * (params.lambda_dice * tumor.dice + params.lambda_bce * tumor.bce);
    return r;
}

} // namespace livseg::neural
