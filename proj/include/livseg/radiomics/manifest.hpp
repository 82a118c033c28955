#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace livseg::radiomics {

enum class FeatureGroup { FirstOrder, Gradient, RunLength, Glcm, Shape, Moments };

inline constexpr std::size_t kFirstOrderCount = 34;
inline constexpr std::size_t kGradientCount = 2;
inline constexpr std::size_t kRunLengthCount = 11;
inline constexpr std::size_t kGlcmCount = 22;
inline constexpr std::size_t kShapeCount = 8;
inline constexpr std::size_t kMomentCount = 3;
inline constexpr std::size_t kCoreCount = 80;
inline constexpr std::size_t kBandCount = 72;
inline constexpr std::size_t kWaveletBands = 8;
inline constexpr std::size_t kFeatureCount = kCoreCount + kBandCount + kWaveletBands * kBandCount;

extern const std::array<std::string_view, kFirstOrderCount> kFirstOrderNames;
extern const std::array<std::string_view, kGradientCount> kGradientNames;
extern const std::array<std::string_view, kRunLengthCount> kRunLengthNames;
extern const std::array<std::string_view, kGlcmCount> kGlcmNames;
extern const std::array<std::string_view, kShapeCount> kShapeNames;
extern const std::array<std::string_view, kMomentCount> kMomentNames;
extern const std::array<std::string_view, kWaveletBands> kWaveletBandNames;

std::string_view group_name(FeatureGroup g);

struct ManifestEntry {
    std::string name;      // e.g. "wavelet_HLL.glcm.contrast"
    FeatureGroup group;
    std::string qualifier; // "core", "band" or "wavelet_XYZ"
    std::string feature;   // bare feature name
};

/// Ordered list of the extracted features. Order: core (first-order,
/// gradient, run-length, GLCM, shape, moments), boundary band, then the
/// eight wavelet sub-bands; band and sub-band blocks omit shape.
class FeatureManifest {
public:
    static const FeatureManifest& standard();

    std::size_t size() const noexcept { return entries_.size(); }
    const ManifestEntry& operator[](std::size_t i) const { return entries_[i]; }
    const std::vector<ManifestEntry>& entries() const noexcept { return entries_; }
    std::vector<std::string> names() const;

    /// Index of a name; throws InvalidArgument if absent.
    std::size_t index_of(std::string_view name) const;

    std::size_t count(FeatureGroup g, std::string_view qualifier) const;

    std::string to_json() const;
    static FeatureManifest from_json(std::string_view text);

    friend bool operator==(const FeatureManifest& a, const FeatureManifest& b) { return a.names() == b.names(); }

private:
    std::vector<ManifestEntry> entries_;
};

} // namespace livseg::radiomics
