#pragma once

#include <vector>

#include "livseg/neural/tensor.hpp"

namespace livseg::neural {

/// Additive attention gate with F intermediate channels. Matrices are
/// row-major: wx is F x C_x, wg is F x C_g.
struct AttentionGateParams {
    int inter_channels = 0;
    int x_channels = 0;
    int g_channels = 0;
    std::vector<double> wx;
    std::vector<double> wg;
    std::vector<double> b;    // F
    std::vector<double> psi;  // F

    static AttentionGateParams zeros(int inter, int cx, int cg);
    void validate() const;
};

struct AttentionGateOutput {
    Tensor gated;  // (C_x, H, W)
    Tensor alpha;  // (1, H, W)
};

struct AttentionGateGrad {
    Tensor dx;
    Tensor dg;
    AttentionGateParams dparams;
};

/// Bilinear resampling of a (C, H, W) map with aligned corners.
Tensor resize_bilinear(const Tensor& g, int h, int w);

/// alpha = sigmoid(psi . relu(Wx x + Wg g' + b)), g' = g resampled to the
/// spatial size of x; gated = alpha * x broadcast over channels.
AttentionGateOutput attention_gate(const Tensor& x, const Tensor& g, const AttentionGateParams& p);

/// Gradients of sum(d_gated * gated) with respect to x, g and the params.
AttentionGateGrad attention_gate_backward(const Tensor& x, const Tensor& g, const AttentionGateParams& p,
                                          const Tensor& d_gated);

} // namespace livseg::neural
