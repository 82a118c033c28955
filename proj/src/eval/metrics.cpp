#include "livseg/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "livseg/core/format.hpp"

namespace livseg::eval {

CaseMetrics compute_metrics(const volumes::Mask3D& pred, const volumes::Mask3D& truth, std::string case_id) {
    volumes::require_same_grid(pred.grid(), truth.grid(), "compute_metrics");
    CaseMetrics m;
    m.case_id = std::move(case_id);
    const auto p = pred.data(), t = truth.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const bool a = p[i] != 0, b = t[i] != 0;
        m.pred_size += a;
        m.truth_size += b;
        m.intersection += a && b;
    }
    const auto inter = static_cast<double>(m.intersection);
    m.sensitivity_defined = m.truth_size > 0;
    m.ppv_defined = m.pred_size > 0;
    m.sensitivity = m.truth_size > 0 ? inter / static_cast<double>(m.truth_size) : (m.pred_size == 0 ? 1.0 : 0.0);
    m.ppv = m.pred_size > 0 ? inter / static_cast<double>(m.pred_size) : (m.truth_size == 0 ? 1.0 : 0.0);
    const auto total = m.pred_size + m.truth_size;
    m.dice = total > 0 ? 2.0 * inter / static_cast<double>(total) : 1.0;
    return m;
}

Summary summarize(const std::vector<double>& values) {
    Summary s;
    if (values.empty()) return s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

MetricsReport MetricsReport::from_cases(std::vector<CaseMetrics> cases) {
    MetricsReport r;
    r.cases = std::move(cases);
    std::vector<double> se, pp, di;
    for (const auto& c : r.cases) {
        se.push_back(c.sensitivity);
        pp.push_back(c.ppv);
        di.push_back(c.dice);
    }
    r.sensitivity = summarize(se);
    r.ppv = summarize(pp);
    r.dice = summarize(di);
    return r;
}

std::string MetricsReport::to_csv() const {
    std::ostringstream os;
    os << "case_id,sensitivity,ppv,dice,intersection,pred_size,truth_size\n";
    for (const auto& c : cases)
        os << c.case_id << ',' << format_double(c.sensitivity) << ',' << format_double(c.ppv) << ','
           << format_double(c.dice) << ',' << c.intersection << ',' << c.pred_size << ',' << c.truth_size << '\n';
    os << "mean," << format_double(sensitivity.mean) << ',' << format_double(ppv.mean) << ','
       << format_double(dice.mean) << ",,,\n";
    os << "std," << format_double(sensitivity.std) << ',' << format_double(ppv.std) << ','
       << format_double(dice.std) << ",,,\n";
    return os.str();
}

std::string MetricsReport::to_json() const {
    nlohmann::json j;
    j["cases"] = nlohmann::json::array();
    for (const auto& c : cases)
        j["cases"].push_back({{"case_id", c.case_id},
                              {"sensitivity", c.sensitivity},
                              {"ppv", c.ppv},
                              {"dice", c.dice},
                              {"intersection", c.intersection},
                              {"pred_size", c.pred_size},
                              {"truth_size", c.truth_size},
                              {"sensitivity_defined", c.sensitivity_defined},
                              {"ppv_defined", c.ppv_defined}});
    auto sj = [](const Summary& s) { return nlohmann::json{{"mean", s.mean}, {"std", s.std}}; };
    j["summary"] = {{"sensitivity", sj(sensitivity)}, {"ppv", sj(ppv)}, {"dice", sj(dice)}};
    return j.dump(2);
}

const char* stratum_name(SizeStratum s) noexcept {
    switch (s) {
    case SizeStratum::Small: return "small";
    case SizeStratum::Medium: return "medium";
    case SizeStratum::Large: return "large";
    }
    return "?";
}

double equivalent_diameter(double volume_mm3) {
    if (!(volume_mm3 >= 0.0)) throw InvalidArgument("equivalent_diameter: volume must be non-negative");
    return std::cbrt(6.0 * volume_mm3 / std::numbers::pi);
}

SizeStratum classify_diameter(double d) {
    constexpr double kLow = 10.0, kHigh = 30.0, kTol = 1e-9;
    if (d < kLow * (1.0 - kTol)) return SizeStratum::Small;
    if (d > kHigh * (1.0 + kTol)) return SizeStratum::Large;
    return SizeStratum::Medium;
}

std::vector<StratifiedLesion> stratify_by_size(const volumes::Labeling& components, const volumes::Spacing& spacing) {
    const double vv = spacing.sx * spacing.sy * spacing.sz;
    std::vector<StratifiedLesion> out;
    for (const auto& c : components.components) {
        StratifiedLesion s;
        s.label = c.label;
        s.voxels = c.size;
        s.volume_mm3 = static_cast<double>(c.size) * vv;
        s.diameter_mm = equivalent_diameter(s.volume_mm3);
        s.stratum = classify_diameter(s.diameter_mm);
        out.push_back(s);
    }
    return out;
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& diffs) {
    std::vector<double> d;
    for (double v : diffs) {
        if (std::isnan(v)) throw InvalidArgument("wilcoxon: NaN difference");
        if (v != 0.0) d.push_back(v);
    }
    const std::size_t n = d.size();
    if (n < 5) throw InvalidArgument("wilcoxon: need at least 5 non-zero differences");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::abs(d[a]) < std::abs(d[b]); });
    // Ranks doubled so mid-ranks stay integral.
    std::vector<long> rank2(n);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
        const long r2 = static_cast<long>(i + 1 + j + 1);  // 2 * mean of ranks i+1..j+1
        for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = r2;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    long w2 = 0, total2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        total2 += rank2[i];
        if (d[i] > 0) w2 += rank2[i];
    }
    WilcoxonResult r;
    r.n = n;
    r.w_plus = static_cast<double>(w2) / 2.0;
    r.w_minus = static_cast<double>(total2 - w2) / 2.0;
    r.statistic = std::min(r.w_plus, r.w_minus);

    if (n <= kWilcoxonExactMax) {
        // counts[s] = number of sign patterns whose doubled positive rank sum is s.
        std::vector<double> counts(static_cast<std::size_t>(total2) + 1, 0.0);
        counts[0] = 1.0;
        long reach = 0;
        for (std::size_t i = 0; i < n; ++i) {
            for (long s = reach; s >= 0; --s)
                if (counts[s] != 0.0) counts[s + rank2[i]] += counts[s];
            reach += rank2[i];
        }
        double lo = 0.0, hi = 0.0;
        for (long s = 0; s <= total2; ++s) {
            if (s <= w2) lo += counts[s];
            if (s >= w2) hi += counts[s];
        }
        const double all = std::ldexp(1.0, static_cast<int>(n));
        r.p_value = std::min(1.0, 2.0 * std::min(lo, hi) / all);
        r.exact = true;
    } else {
        const double nn = static_cast<double>(n);
        const double mean = nn * (nn + 1.0) / 4.0;
        const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
        const double dev = std::abs(r.w_plus - mean);
        const double z = var > 0.0 ? std::max(0.0, dev - 0.5) / std::sqrt(var) : 0.0;
        r.p_value = std::min(1.0, std::erfc(z / std::numbers::sqrt2));
        r.exact = false;
    }
    return r;
}

WilcoxonResult wilcoxon_paired(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw InvalidArgument("wilcoxon: paired samples differ in length");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return wilcoxon_signed_rank(d);
}

} // namespace livseg::eval
