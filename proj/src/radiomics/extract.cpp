#include <algorithm>
#include <sstream>

#include "livseg/core/format.hpp"
#include "livseg/core/parallel.hpp"
#include "livseg/radiomics/features.hpp"
#include "livseg/radiomics/wavelet.hpp"

namespace livseg::radiomics {

namespace {

constexpr double kBandWidth = 2.0;
constexpr double kGradientSigma = 1.5;
// Crop margin: band half-width plus the smoothing and difference support,
// so cropping never changes a feature value.
constexpr int kMargin = 2 + 6 + 1;

template <std::size_t N>
void put(std::vector<double>& out, const std::array<double, N>& a) {
    out.insert(out.end(), a.begin(), a.end());
}

void texture_block(std::vector<double>& out, const RegionField& f, double sigma, bool with_shape) {
    put(out, first_order_features(f));
    put(out, gradient_features(f, sigma));
    put(out, rlm_features(f));
    put(out, glcm_features(f));
    if (with_shape) put(out, shape_features(f));
    put(out, moment_invariants(f));
}

// Bounding box crop of the region grown to at least two voxels per axis
// (where the volume allows), as the input of the wavelet transform.
RegionField wavelet_crop(const CandidateRegion& region, const Volume3D& volume) {
    auto grow = [](int lo, int hi, int n) {
        if (hi - lo + 1 >= 2 || n < 2) return std::pair{lo, hi};
        return hi + 1 < n ? std::pair{lo, hi + 1} : std::pair{lo - 1, hi};
    };
    const auto& b = region.bbox;
    const auto& d = volume.dims();
    const auto [x0, x1] = grow(b.lo.x, b.hi.x, d.nx);
    const auto [y0, y1] = grow(b.lo.y, b.hi.y, d.ny);
    const auto [z0, z1] = grow(b.lo.z, b.hi.z, d.nz);
    CandidateRegion r = region;
    r.bbox = {{x0, y0, z0}, {x1, y1, z1}};
    return make_region_field(r, volume, 0);
}

} // namespace

FirstOrder first_order_features(const CandidateRegion& region, const Volume3D& volume) {
    return first_order_features(make_region_field(region, volume, 0));
}
GradientStats gradient_features(const CandidateRegion& region, const Volume3D& volume, double sigma_voxels) {
    return gradient_features(make_region_field(region, volume, kMargin), sigma_voxels);
}
RunLength rlm_features(const CandidateRegion& region, const Volume3D& volume) {
    return rlm_features(make_region_field(region, volume, 0));
}
Glcm glcm_features(const CandidateRegion& region, const Volume3D& volume) {
    return glcm_features(make_region_field(region, volume, 0));
}
Shape shape_features(const CandidateRegion& region) {
    const auto& b = region.bbox;
    RegionField f;
    f.grid = {b.extent(), region.grid.spacing};
    f.values.assign(f.grid.size(), 0.0);
    f.inside.assign(f.grid.size(), 0);
    for (auto v : region.voxels) {
        const auto p = region.grid.coords(v);
        const auto i = f.grid.index(p.x - b.lo.x, p.y - b.lo.y, p.z - b.lo.z);
        f.inside[i] = 1;
        f.roi.push_back(i);
    }
    std::sort(f.roi.begin(), f.roi.end());
    return shape_features(f);
}
Moments moment_invariants(const CandidateRegion& region, const Volume3D& volume) {
    return moment_invariants(make_region_field(region, volume, 0));
}

FeatureVector extract_features(const CandidateRegion& region, const Volume3D& volume,
                               const FeatureManifest& manifest) {
    if (&manifest != &FeatureManifest::standard() && !(manifest == FeatureManifest::standard()))
        throw InvalidArgument("extract_features: only the standard manifest is supported");
    FeatureVector out;
    out.region_id = region.id;
    out.values.reserve(kFeatureCount);

    texture_block(out.values, make_region_field(region, volume, kMargin), kGradientSigma, true);

    const auto band = boundary_band(region, kBandWidth);
    texture_block(out.values, make_region_field(band.band, volume, kMargin), kGradientSigma, false);

    const RegionField crop = wavelet_crop(region, volume);
    const auto bands = haar_analysis(RealField(crop.grid, crop.values));
    const auto& cg = crop.grid;
    const auto& bg = bands[0].grid();
    std::vector<std::uint8_t> inside(bg.size(), 0);
    for (auto i : crop.roi) {
        const auto p = cg.coords(i);
        inside[bg.index(p.x / 2, p.y / 2, p.z / 2)] = 1; // any child in the region
    }
    std::vector<std::size_t> roi;
    for (std::size_t i = 0; i < inside.size(); ++i)
        if (inside[i]) roi.push_back(i);
    for (const auto& b : bands) {
        RegionField f;
        f.grid = bg;
        f.values.assign(b.data().begin(), b.data().end());
        f.inside = inside;
        f.roi = roi;
        f.quantization = Quantization::MinMax;
        texture_block(out.values, f, kGradientSigma, false);
    }
    if (out.values.size() != manifest.size()) throw Error("extract_features: internal length mismatch");
    return out;
}

std::vector<FeatureVector> extract_all(std::span<const CandidateRegion> regions, const Volume3D& volume,
                                       int workers) {
    std::vector<FeatureVector> out(regions.size());
    parallel_for(regions.size(), workers, [&](std::size_t i) { out[i] = extract_features(regions[i], volume); });
    return out;
}

std::string features_to_csv(const FeatureManifest& manifest, std::span<const FeatureVector> rows) {
    std::string s = "region_id";
    for (const auto& e : manifest.entries()) s += "," + e.name;
    s += "\n";
    for (const auto& r : rows) {
        if (r.values.size() != manifest.size()) throw InvalidArgument("features_to_csv: row length mismatch");
        s += std::to_string(r.region_id);
        for (double v : r.values) {
            s += ',';
            s += format_double(v);
        }
        s += '\n';
    }
    return s;
}

std::vector<FeatureVector> features_from_csv(const FeatureManifest& manifest, std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) throw FormatError("feature CSV: missing header");
    std::vector<std::string> header;
    {
        std::istringstream h(line);
        std::string cell;
        while (std::getline(h, cell, ',')) header.push_back(cell);
    }
    if (header.size() != manifest.size() + 1 || header[0] != "region_id")
        throw FormatError("feature CSV: header does not match the manifest");
    for (std::size_t i = 0; i < manifest.size(); ++i)
        if (header[i + 1] != manifest[i].name) throw FormatError("feature CSV: unexpected column " + header[i + 1]);
    std::vector<FeatureVector> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream r(line);
        std::string cell;
        FeatureVector fv;
        std::getline(r, cell, ',');
        try {
            fv.region_id = std::stoi(cell);
            while (std::getline(r, cell, ',')) fv.values.push_back(parse_double(cell));
        } catch (const std::exception& e) {
            throw FormatError(std::string("feature CSV: bad number: ") + e.what());
        }
        if (fv.values.size() != manifest.size()) throw FormatError("feature CSV: row width mismatch");
        rows.push_back(std::move(fv));
    }
    return rows;
}

} // namespace livseg::radiomics
