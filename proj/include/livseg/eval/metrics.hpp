#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "livseg/volumes/components.hpp"
#include "livseg/volumes/volume.hpp"

namespace livseg::eval {

/// Volume-level overlap of a prediction P with a reference T.
/// Empty reference: sensitivity is 1 when P is also empty, else 0; the same
/// rule gives PPV for an empty P and Dice for two empty sets.
struct CaseMetrics {
    std::string case_id;
    double sensitivity = 0.0;
    double ppv = 0.0;
    double dice = 0.0;
    std::size_t intersection = 0;
    std::size_t pred_size = 0;
    std::size_t truth_size = 0;
    bool sensitivity_defined = true;  // false when T is empty
    bool ppv_defined = true;          // false when P is empty
};

CaseMetrics compute_metrics(const volumes::Mask3D& pred, const volumes::Mask3D& truth, std::string case_id = {});

struct Summary {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation, 0 for a single case
};

struct MetricsReport {
    std::vector<CaseMetrics> cases;
    Summary sensitivity;
    Summary ppv;
    Summary dice;

    static MetricsReport from_cases(std::vector<CaseMetrics> cases);
    /// One row per case followed by "mean" and "std" rows.
    std::string to_csv() const;
    std::string to_json() const;
};

Summary summarize(const std::vector<double>& values);

enum class SizeStratum { Small, Medium, Large };

const char* stratum_name(SizeStratum s) noexcept;

/// (6 V / pi)^(1/3) for a volume in mm^3.
double equivalent_diameter(double volume_mm3);

/// Small below 10 mm, large above 30 mm, medium otherwise (both bounds
/// inclusive). Diameters within 1e-9 relative of a bound count as on it.
SizeStratum classify_diameter(double diameter_mm);

struct StratifiedLesion {
    int label = 0;
    std::size_t voxels = 0;
    double volume_mm3 = 0.0;
    double diameter_mm = 0.0;
    SizeStratum stratum = SizeStratum::Small;
};

std::vector<StratifiedLesion> stratify_by_size(const volumes::Labeling& components, const volumes::Spacing& spacing);

struct WilcoxonResult {
    std::size_t n = 0;      // non-zero differences used
    double w_plus = 0.0;    // sum of ranks of positive differences
    double w_minus = 0.0;
    double statistic = 0.0; // min(w_plus, w_minus)
    double p_value = 1.0;   // two-sided
    bool exact = true;
};

inline constexpr std::size_t kWilcoxonExactMax = 25;

/// Signed-rank test on paired differences. Zeros are dropped and tied
/// magnitudes share the mean rank. Exact null distribution up to 25
/// differences, normal approximation with tie and continuity correction
/// beyond. Throws InvalidArgument with fewer than 5 non-zero differences.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& diffs);

/// Differences a[i] - b[i].
WilcoxonResult wilcoxon_paired(const std::vector<double>& a, const std::vector<double>& b);

} // namespace livseg::eval
