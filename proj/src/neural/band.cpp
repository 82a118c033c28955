#include "livseg/neural/band.hpp"

#include <algorithm>

#include "livseg/volumes/distance.hpp"

namespace livseg::neural {

using volumes::Mask3D;
using volumes::Volume3D;

namespace {

std::vector<std::size_t> band_indices(const volumes::SignedDistanceField& sdf, double d_max) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < sdf.size(); ++i)
        if (sdf.within(i, d_max)) out.push_back(i);
    return out;
}

} // namespace

std::vector<BandVoxel> make_band_dataset(const Volume3D& volume, const Mask3D& mask, double d_max) {
    volumes::require_same_grid(volume.grid(), mask.grid(), "make_band_dataset");
    if (mask.empty()) throw InvalidArgument("make_band_dataset: empty mask");
    if (!(d_max >= 0.0)) throw InvalidArgument("make_band_dataset: band width must be non-negative");
    const auto sdf = volumes::signed_edt(mask);
    std::vector<BandVoxel> out;
    for (std::size_t i : band_indices(sdf, d_max)) {
        const auto s = sdf.signed_squared(i);
        out.push_back({i, s, s <= 0 ? 1 : 0});
    }
    return out;
}

std::vector<double> extract_patch(const Volume3D& volume, std::size_t index, int patch_size) {
    if (volume.kind() != volumes::ValueKind::Normalized8)
        throw InvalidArgument("extract_patch: expects an 8-bit normalized volume");
    if (patch_size < 1) throw InvalidArgument("extract_patch: patch size must be positive");
    const auto& g = volume.grid();
    const auto c = g.coords(index);
    const int r = patch_size / 2;
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(patch_size) * patch_size * patch_size);
    for (int dz = 0; dz < patch_size; ++dz) {
        const int z = std::clamp(c.z - r + dz, 0, g.dims.nz - 1);
        for (int dy = 0; dy < patch_size; ++dy) {
            const int y = std::clamp(c.y - r + dy, 0, g.dims.ny - 1);
            for (int dx = 0; dx < patch_size; ++dx) {
                const int x = std::clamp(c.x - r + dx, 0, g.dims.nx - 1);
                out.push_back((static_cast<double>(volume.at(x, y, z)) - 127.5) / 127.5);
            }
        }
    }
    return out;
}

PatchSet make_patch_set(const Volume3D& volume, const std::vector<BandVoxel>& voxels, int patch_size) {
    PatchSet set;
    set.patch_size = patch_size;
    set.patches.reserve(voxels.size() * set.voxels());
    for (const auto& v : voxels) set.add(extract_patch(volume, v.index, patch_size), v.label);
    return set;
}

VoxelClassifier cnn_classifier(const Cnn3dModel& model, const Volume3D& volume, int workers) {
    return [&model, &volume, workers](const std::vector<std::size_t>& idx) {
        constexpr std::size_t kBatch = 256;
        const int s = model.patch_size();
        std::vector<double> out;
        out.reserve(idx.size());
        for (std::size_t b0 = 0; b0 < idx.size(); b0 += kBatch) {
            const std::size_t b1 = std::min(idx.size(), b0 + kBatch);
            Tensor batch({static_cast<int>(b1 - b0), s, s, s});
            const std::size_t v = model.voxels_per_patch();
            for (std::size_t i = b0; i < b1; ++i) {
                const auto p = extract_patch(volume, idx[i], s);
                std::copy(p.begin(), p.end(), batch.data.begin() + (i - b0) * v);
            }
            const auto prob = forward(model, batch, nullptr, workers);
            out.insert(out.end(), prob.begin(), prob.end());
        }
        return out;
    };
}

Mask3D refine_labels(const Mask3D& mask, const VoxelClassifier& classifier, double d_max) {
    Mask3D out = mask;
    if (mask.empty()) return out;
    const auto idx = band_indices(volumes::signed_edt(mask), d_max);
    if (idx.empty()) return out;
    const auto prob = classifier(idx);
    if (prob.size() != idx.size()) throw InvalidArgument("refine_labels: classifier returned the wrong count");
    for (std::size_t k = 0; k < idx.size(); ++k) out.set(idx[k], prob[k] >= 0.5);
    return out;
}

Mask3D refine_labels(const Mask3D& mask, const Volume3D& volume, const Cnn3dModel& model, int patch_size,
                     double d_max, int workers) {
    volumes::require_same_grid(volume.grid(), mask.grid(), "refine_labels");
    if (patch_size != model.patch_size()) throw InvalidArgument("refine_labels: patch size does not match the model");
    return refine_labels(mask, cnn_classifier(model, volume, workers), d_max);
}

} // namespace livseg::neural
