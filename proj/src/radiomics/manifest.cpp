#include "livseg/radiomics/manifest.hpp"

#include "json.hpp"
#include <unordered_set>

#include "livseg/core/error.hpp"

namespace livseg::radiomics {

const std::array<std::string_view, kFirstOrderCount> kFirstOrderNames{
    "min", "max", "range", "mean", "median", "mode", "std", "variance", "mad", "robust_mad",
    "skewness", "kurtosis", "energy", "total_energy", "entropy", "uniformity", "rms", "cov",
    "p5", "p10", "p25", "p75", "p90", "p95", "iqr", "p90_p10", "quartile_dispersion",
    "bin_entropy", "bin_energy", "bin_max_frequency", "bin_nonempty", "bin_skewness", "bin_kurtosis",
    "bin_mean_index"};
const std::array<std::string_view, kGradientCount> kGradientNames{"mean", "std"};
const std::array<std::string_view, kRunLengthCount> kRunLengthNames{
    "sre", "lre", "gln", "rln", "rp", "lgre", "hgre", "srlge", "srhge", "lrlge", "lrhge"};
const std::array<std::string_view, kGlcmCount> kGlcmNames{
    "contrast", "correlation", "asm", "entropy", "idm", "dissimilarity", "autocorrelation", "cluster_shade",
    "cluster_prominence", "cluster_tendency", "max_probability", "sum_average", "sum_variance", "sum_entropy",
    "difference_average", "difference_variance", "difference_entropy", "imc1", "imc2", "inverse_variance",
    "joint_average", "joint_variance"};
const std::array<std::string_view, kShapeCount> kShapeNames{
    "volume", "surface_area", "sphericity", "compactness1", "compactness2", "elongation", "flatness",
    "max_diameter"};
const std::array<std::string_view, kMomentCount> kMomentNames{"j1", "j2", "j3"};
const std::array<std::string_view, kWaveletBands> kWaveletBandNames{"LLL", "LLH", "LHL", "LHH",
                                                                    "HLL", "HLH", "HHL", "HHH"};

std::string_view group_name(FeatureGroup g) {
    switch (g) {
    case FeatureGroup::FirstOrder: return "first_order";
    case FeatureGroup::Gradient: return "gradient";
    case FeatureGroup::RunLength: return "rlm";
    case FeatureGroup::Glcm: return "glcm";
    case FeatureGroup::Shape: return "shape";
    case FeatureGroup::Moments: return "moments";
    }
    return "?";
}

namespace {

FeatureGroup group_from_name(std::string_view s) {
    for (auto g : {FeatureGroup::FirstOrder, FeatureGroup::Gradient, FeatureGroup::RunLength, FeatureGroup::Glcm,
                   FeatureGroup::Shape, FeatureGroup::Moments})
        if (group_name(g) == s) return g;
    throw FormatError("unknown feature group '" + std::string(s) + "'");
}

template <std::size_t N>
void add_group(std::vector<ManifestEntry>& out, const std::string& qualifier, FeatureGroup g,
               const std::array<std::string_view, N>& names) {
    for (auto n : names)
        out.push_back({qualifier + "." + std::string(group_name(g)) + "." + std::string(n), g, qualifier,
                       std::string(n)});
}

void add_block(std::vector<ManifestEntry>& out, const std::string& qualifier, bool with_shape) {
    add_group(out, qualifier, FeatureGroup::FirstOrder, kFirstOrderNames);
    add_group(out, qualifier, FeatureGroup::Gradient, kGradientNames);
    add_group(out, qualifier, FeatureGroup::RunLength, kRunLengthNames);
    add_group(out, qualifier, FeatureGroup::Glcm, kGlcmNames);
    if (with_shape) add_group(out, qualifier, FeatureGroup::Shape, kShapeNames);
    add_group(out, qualifier, FeatureGroup::Moments, kMomentNames);
}

} // namespace

const FeatureManifest& FeatureManifest::standard() {
    static const FeatureManifest m = [] {
        FeatureManifest f;
        add_block(f.entries_, "core", true);
        add_block(f.entries_, "band", false);
        for (auto b : kWaveletBandNames) add_block(f.entries_, "wavelet_" + std::string(b), false);
        return f;
    }();
    return m;
}

std::vector<std::string> FeatureManifest::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.name);
    return out;
}

std::size_t FeatureManifest::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].name == name) return i;
    throw InvalidArgument("feature '" + std::string(name) + "' is not in the manifest");
}

std::size_t FeatureManifest::count(FeatureGroup g, std::string_view qualifier) const {
    std::size_t n = 0;
    for (const auto& e : entries_)
        if (e.group == g && e.qualifier == qualifier) ++n;
    return n;
}

std::string FeatureManifest::to_json() const {
    nlohmann::ordered_json j;
    j["format"] = "livseg.feature_manifest";
    j["version"] = 1;
    j["count"] = entries_.size();
    auto& arr = j["features"] = nlohmann::ordered_json::array();
    for (const auto& e : entries_)
        arr.push_back({{"name", e.name}, {"group", group_name(e.group)}, {"qualifier", e.qualifier},
                       {"feature", e.feature}});
    return j.dump(2) + "\n";
}

FeatureManifest FeatureManifest::from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("feature manifest: ") + e.what());
    }
    if (j.value("format", "") != "livseg.feature_manifest" || j.value("version", 0) != 1)
        throw FormatError("feature manifest: unsupported format or version");
    FeatureManifest f;
    std::unordered_set<std::string> seen;
    for (const auto& e : j.at("features")) {
        ManifestEntry m{e.at("name").get<std::string>(), group_from_name(e.at("group").get<std::string>()),
                        e.at("qualifier").get<std::string>(), e.at("feature").get<std::string>()};
        if (!seen.insert(m.name).second) throw FormatError("feature manifest: duplicate name " + m.name);
        f.entries_.push_back(std::move(m));
    }
    if (j.contains("count") && j["count"].get<std::size_t>() != f.entries_.size())
        throw FormatError("feature manifest: count does not match entries");
    return f;
}

} // namespace livseg::radiomics
