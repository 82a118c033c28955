#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "livseg/volumes/volume.hpp"

namespace livseg::volumes {

enum class DType : std::uint8_t { U8 = 0, F32 = 1 };

/// Untyped on-disk image: grid, element type and raw samples.
struct RawImage {
    Grid grid;
    DType dtype = DType::U8;
    std::vector<std::uint8_t> u8;
    std::vector<float> f32;
};

/// Reads a VOL1 binary (".vol") or a MetaImage header (".mhd") with its
/// detached data file. The extension selects the format.
RawImage read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const RawImage& image);

/// u8 files load as Normalized8 volumes, f32 files as HuFloat.
Volume3D load_volume(const std::filesystem::path& path);
Mask3D load_mask(const std::filesystem::path& path);
ProbMap3D load_probmap(const std::filesystem::path& path);

void save_volume(const Volume3D& v, const std::filesystem::path& path);
void save_volume(const Mask3D& m, const std::filesystem::path& path);
void save_volume(const ProbMap3D& p, const std::filesystem::path& path);

} // namespace livseg::volumes
