#include "livseg/neural/attention.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace livseg::neural {

namespace {

struct Tap {
    int i0, i1;
    double w1;  // weight of i1; i0 gets 1 - w1
};

std::vector<Tap> taps(int src, int dst) {
    std::vector<Tap> t(dst);
    for (int i = 0; i < dst; ++i) {
        const double pos = dst > 1 ? static_cast<double>(i) * (src - 1) / (dst - 1) : 0.0;
        const int i0 = std::min(static_cast<int>(std::floor(pos)), src - 1);
        const int i1 = std::min(i0 + 1, src - 1);
        t[i] = {i0, i1, pos - i0};
    }
    return t;
}

void check_map(const Tensor& t, const char* what) {
    if (t.shape.size() != 3) throw InvalidArgument(std::string("attention gate: ") + what + " must be (C, H, W)");
    if (t.dim(1) < 1 || t.dim(2) < 1) throw InvalidArgument(std::string("attention gate: empty ") + what);
}

struct Forward {
    Tensor gr;                 // resampled gating signal
    std::vector<double> q;     // F x HW pre-activation
    std::vector<double> alpha; // HW
};

Forward run(const Tensor& x, const Tensor& g, const AttentionGateParams& p) {
    p.validate();
    check_map(x, "x");
    check_map(g, "g");
    if (x.dim(0) != p.x_channels) throw InvalidArgument("attention gate: x channels do not match params");
    if (g.dim(0) != p.g_channels) throw InvalidArgument("attention gate: g channels do not match params");
    const int h = x.dim(1), w = x.dim(2), hw = h * w, f = p.inter_channels;
    Forward fw;
    fw.gr = resize_bilinear(g, h, w);
    fw.q.assign(static_cast<std::size_t>(f) * hw, 0.0);
    fw.alpha.assign(hw, 0.0);
    for (int k = 0; k < f; ++k)
        for (int s = 0; s < hw; ++s) {
            double v = p.b[k];
            for (int c = 0; c < p.x_channels; ++c) v += p.wx[k * p.x_channels + c] * x.data[c * hw + s];
            for (int c = 0; c < p.g_channels; ++c) v += p.wg[k * p.g_channels + c] * fw.gr.data[c * hw + s];
            fw.q[k * hw + s] = v;
        }
    for (int s = 0; s < hw; ++s) {
        double z = 0.0;
        for (int k = 0; k < f; ++k) z += p.psi[k] * std::max(0.0, fw.q[k * hw + s]);
        fw.alpha[s] = 1.0 / (1.0 + std::exp(-z));
    }
    return fw;
}

} // namespace

AttentionGateParams AttentionGateParams::zeros(int inter, int cx, int cg) {
    AttentionGateParams p;
    p.inter_channels = inter;
    p.x_channels = cx;
    p.g_channels = cg;
    p.wx.assign(static_cast<std::size_t>(inter) * cx, 0.0);
    p.wg.assign(static_cast<std::size_t>(inter) * cg, 0.0);
    p.b.assign(inter, 0.0);
    p.psi.assign(inter, 0.0);
    return p;
}

void AttentionGateParams::validate() const {
    if (inter_channels < 1 || x_channels < 1 || g_channels < 1)
        throw InvalidArgument("attention gate: channel counts must be positive");
    if (wx.size() != static_cast<std::size_t>(inter_channels) * x_channels ||
        wg.size() != static_cast<std::size_t>(inter_channels) * g_channels ||
        b.size() != static_cast<std::size_t>(inter_channels) || psi.size() != static_cast<std::size_t>(inter_channels))
        throw InvalidArgument("attention gate: parameter sizes do not match channel counts");
}

Tensor resize_bilinear(const Tensor& g, int h, int w) {
    check_map(g, "input");
    if (h < 1 || w < 1) throw InvalidArgument("resize_bilinear: target size must be positive");
    const int c = g.dim(0), gh = g.dim(1), gw = g.dim(2);
    const auto ty = taps(gh, h), tx = taps(gw, w);
    Tensor out({c, h, w});
    for (int k = 0; k < c; ++k)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                auto at = [&](int yy, int xx) { return g.data[(static_cast<std::size_t>(k) * gh + yy) * gw + xx]; };
                const auto& a = ty[y];
                const auto& b = tx[x];
                const double top = (1 - b.w1) * at(a.i0, b.i0) + b.w1 * at(a.i0, b.i1);
                const double bot = (1 - b.w1) * at(a.i1, b.i0) + b.w1 * at(a.i1, b.i1);
                out.data[(static_cast<std::size_t>(k) * h + y) * w + x] = (1 - a.w1) * top + a.w1 * bot;
            }
    return out;
}

AttentionGateOutput attention_gate(const Tensor& x, const Tensor& g, const AttentionGateParams& p) {
    const Forward fw = run(x, g, p);
    const int h = x.dim(1), w = x.dim(2), hw = h * w;
    AttentionGateOutput out{Tensor(x.shape), Tensor({1, h, w}, fw.alpha)};
    for (int c = 0; c < x.dim(0); ++c)
        for (int s = 0; s < hw; ++s) out.gated.data[c * hw + s] = fw.alpha[s] * x.data[c * hw + s];
    return out;
}

AttentionGateGrad attention_gate_backward(const Tensor& x, const Tensor& g, const AttentionGateParams& p,
                                          const Tensor& d_gated) {
    const Forward fw = run(x, g, p);
    if (d_gated.shape != x.shape) throw InvalidArgument("attention gate: upstream gradient shape mismatch");
    const int h = x.dim(1), w = x.dim(2), hw = h * w, f = p.inter_channels;
    const int cx = p.x_channels, cg = p.g_channels;
    AttentionGateGrad gr{Tensor(x.shape), Tensor(g.shape), AttentionGateParams::zeros(f, cx, cg)};
    Tensor dgr(fw.gr.shape);
    std::vector<double> dq(f);
    for (int s = 0; s < hw; ++s) {
        double dalpha = 0.0;
        for (int c = 0; c < cx; ++c) {
            dalpha += d_gated.data[c * hw + s] * x.data[c * hw + s];
            gr.dx.data[c * hw + s] = fw.alpha[s] * d_gated.data[c * hw + s];
        }
        const double a = fw.alpha[s];
        const double dz = dalpha * a * (1.0 - a);
        for (int k = 0; k < f; ++k) {
            const double q = fw.q[k * hw + s];
            gr.dparams.psi[k] += std::max(0.0, q) * dz;
            dq[k] = q > 0.0 ? p.psi[k] * dz : 0.0;
            gr.dparams.b[k] += dq[k];
        }
        for (int k = 0; k < f; ++k) {
            for (int c = 0; c < cx; ++c) {
                gr.dparams.wx[k * cx + c] += dq[k] * x.data[c * hw + s];
                gr.dx.data[c * hw + s] += p.wx[k * cx + c] * dq[k];
            }
            for (int c = 0; c < cg; ++c) {
                gr.dparams.wg[k * cg + c] += dq[k] * fw.gr.data[c * hw + s];
                dgr.data[c * hw + s] += p.wg[k * cg + c] * dq[k];
            }
        }
    }
    // Transpose of the bilinear resampling.
    const int gh = g.dim(1), gw = g.dim(2);
    const auto ty = taps(gh, h), tx = taps(gw, w);
    for (int c = 0; c < cg; ++c)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) {
                const double d = dgr.data[(static_cast<std::size_t>(c) * h + y) * w + xx];
                const auto& a = ty[y];
                const auto& b = tx[xx];
                auto add = [&](int yy, int xi, double wt) {
                    gr.dg.data[(static_cast<std::size_t>(c) * gh + yy) * gw + xi] += wt * d;
                };
                add(a.i0, b.i0, (1 - a.w1) * (1 - b.w1));
                add(a.i0, b.i1, (1 - a.w1) * b.w1);
                add(a.i1, b.i0, a.w1 * (1 - b.w1));
                add(a.i1, b.i1, a.w1 * b.w1);
            }
    return gr;
}

} // namespace livseg::neural
