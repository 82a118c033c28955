#include <algorithm>
#include <cmath>
#include <map>

#include "livseg/radiomics/features.hpp"

namespace livseg::radiomics {

namespace {

constexpr int kBins = 64;
constexpr double kBinWidth = 4.0;

double percentile(const std::vector<double>& sorted, double p) {
    const double pos = p / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double f = pos - static_cast<double>(lo);
    return f == 0.0 ? sorted[lo] : sorted[lo] + f * (sorted[hi] - sorted[lo]);
}

int bin_of(double v, Quantization q, double lo, double hi) {
    if (q == Quantization::Fixed) return std::clamp(static_cast<int>(std::floor(v / kBinWidth)), 0, kBins - 1);
    if (hi <= lo) return 0;
    return std::clamp(static_cast<int>(std::floor((v - lo) / (hi - lo) * kBins)), 0, kBins - 1);
}

} // namespace

FirstOrder first_order_features(std::span<const double> values, Quantization q, double voxel_volume) {
    FirstOrder f{};
    if (values.empty()) return f;
    const double n = static_cast<double>(values.size());
    std::vector<double> s(values.begin(), values.end());
    std::sort(s.begin(), s.end());

    double sum = 0.0, sum_sq = 0.0;
    for (double v : s) {
        sum += v;
        sum_sq += v * v;
    }
    const double mean = s.front() == s.back() ? s.front() : sum / n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0, mad = 0.0;
    for (double v : s) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
        mad += std::abs(d);
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    mad /= n;
    const double sd = std::sqrt(m2);

    // Exact-value histogram for mode, entropy and uniformity.
    std::map<double, std::size_t> counts;
    for (double v : s) ++counts[v];
    double mode = s.front();
    std::size_t best = 0;
    double entropy = 0.0, uniformity = 0.0;
    for (const auto& [v, c] : counts) {
        if (c > best) {
            best = c;
            mode = v;
        }
        const double p = static_cast<double>(c) / n;
        entropy -= p * std::log2(p);
        uniformity += p * p;
    }

    const double p10 = percentile(s, 10), p90 = percentile(s, 90);
    double robust_sum = 0.0;
    std::size_t robust_n = 0;
    for (double v : s)
        if (v >= p10 && v <= p90) {
            robust_sum += v;
            ++robust_n;
        }
    double robust_mad = 0.0;
    if (robust_n > 0) {
        const double rmean = robust_sum / static_cast<double>(robust_n);
        for (double v : s)
            if (v >= p10 && v <= p90) robust_mad += std::abs(v - rmean);
        robust_mad /= static_cast<double>(robust_n);
    }

    const double p25 = percentile(s, 25), p75 = percentile(s, 75);
    const double qsum = p75 + p25;

    std::array<double, kBins> hist{};
    for (double v : s) hist[bin_of(v, q, s.front(), s.back())] += 1.0;
    double bin_entropy = 0.0, bin_energy = 0.0, bin_max = 0.0, nonempty = 0.0, bin_mean = 0.0;
    for (int b = 0; b < kBins; ++b) {
        const double p = hist[b] / n;
        if (p <= 0.0) continue;
        bin_entropy -= p * std::log2(p);
        bin_energy += p * p;
        bin_max = std::max(bin_max, p);
        nonempty += 1.0;
        bin_mean += p * b;
    }
    double b2 = 0.0, b3 = 0.0, b4 = 0.0;
    for (int b = 0; b < kBins; ++b) {
        const double p = hist[b] / n;
        const double d = b - bin_mean;
        b2 += p * d * d;
        b3 += p * d * d * d;
        b4 += p * d * d * d * d;
    }

    std::size_t i = 0;
    f[i++] = s.front();
    f[i++] = s.back();
    f[i++] = s.back() - s.front();
    f[i++] = mean;
    f[i++] = percentile(s, 50);
    f[i++] = mode;
    f[i++] = sd;
    f[i++] = m2;
    f[i++] = mad;
    f[i++] = robust_mad;
    f[i++] = m2 > 0.0 ? m3 / (m2 * sd) : 0.0;
    f[i++] = m2 > 0.0 ? m4 / (m2 * m2) : 0.0;
    f[i++] = sum_sq;
    f[i++] = sum_sq * voxel_volume;
    f[i++] = entropy;
    f[i++] = uniformity;
    f[i++] = std::sqrt(sum_sq / n);
    f[i++] = mean != 0.0 ? sd / mean : 0.0;
    f[i++] = percentile(s, 5);
    f[i++] = p10;
    f[i++] = p25;
    f[i++] = p75;
    f[i++] = p90;
    f[i++] = percentile(s, 95);
    f[i++] = p75 - p25;
    f[i++] = p90 - p10;
    f[i++] = qsum != 0.0 ? (p75 - p25) / qsum : 0.0;
    f[i++] = bin_entropy;
    f[i++] = bin_energy;
    f[i++] = bin_max;
    f[i++] = nonempty;
    f[i++] = b2 > 0.0 ? b3 / std::pow(b2, 1.5) : 0.0;
    f[i++] = b2 > 0.0 ? b4 / (b2 * b2) : 0.0;
    f[i++] = bin_mean;
    return f;
}

FirstOrder first_order_features(const RegionField& f) {
    const auto v = f.roi_values();
    return first_order_features(v, f.quantization, f.grid.voxel_volume());
}

} // namespace livseg::radiomics
