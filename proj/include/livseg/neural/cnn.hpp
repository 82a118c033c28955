#pragma once

#include <cstdint>
#include <new>
#include <string>
#include <vector>

#include "livseg/neural/tensor.hpp"

namespace livseg::neural {

/// Allocator returning 64-byte aligned storage. Keeping every buffer and
/// weight block on the same alignment makes vectorized kernels sum in the
/// same order regardless of where memory lands, so results are bitwise
/// reproducible across runs and thread counts.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlign{64};
    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}
    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }
    template <class U>
    bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using AlignedVector = std::vector<double, AlignedAllocator<double>>;

/// Layer widths of the patch classifier. The default is the full-width
/// stack; narrow() is a cheaper variant used by the end-to-end pipeline.
struct CnnArchitecture {
    int patch_size = 11;
    std::vector<int> conv_channels{64, 64, 128, 128, 256};
    /// Index of each conv after which a 2x2x2 max pool follows.
    std::vector<int> pool_after{1, 3, 4};
    int fc_hidden = 64;

    static CnnArchitecture narrow(int patch_size = 11);
    void validate() const;

    /// Spatial edge length after every pool, e.g. 11 -> {5, 2, 1}.
    std::vector<int> pooled_sizes() const;
    /// Edge length entering the fully connected head.
    int final_size() const;
    std::size_t flat_features() const;
    std::size_t parameter_count() const;

    friend bool operator==(const CnnArchitecture&, const CnnArchitecture&) = default;
};

/// Offsets of one layer's weights and bias inside the flat parameter vector.
/// Every block starts on a 64-byte boundary; padding values stay zero.
struct ParamSlice {
    std::size_t weight = 0;
    std::size_t weight_rows = 0;  // fan-in
    std::size_t weight_cols = 0;  // fan-out
    std::size_t bias = 0;

    friend bool operator==(const ParamSlice&, const ParamSlice&) = default;
};

/// 3D patch classifier: 3x3x3 convs (stride 1, pad 1) with ReLU, 2x2x2 max
/// pools (floor, skipped once the edge is 1), FC + ReLU, FC, sigmoid.
/// Activations are channels-last; conv weights are (27 * C_in) x C_out
/// row-major with kernel offset (kz, ky, kx) outermost.
class Cnn3dModel {
public:
    Cnn3dModel() = default;
    explicit Cnn3dModel(CnnArchitecture arch);

    /// He-normal weights, zero biases.
    static Cnn3dModel initialized(CnnArchitecture arch, std::uint64_t seed);

    const CnnArchitecture& architecture() const noexcept { return arch_; }
    int patch_size() const noexcept { return arch_.patch_size; }
    std::size_t voxels_per_patch() const noexcept;

    AlignedVector& params() noexcept { return params_; }
    const AlignedVector& params() const noexcept { return params_; }
    const std::vector<ParamSlice>& slices() const noexcept { return slices_; }

    friend bool operator==(const Cnn3dModel&, const Cnn3dModel&) = default;

private:
    CnnArchitecture arch_;
    std::vector<ParamSlice> slices_;  // convs, then the two FC layers
    AlignedVector params_;
};

/// Activations kept by forward() for a later backward().
struct ForwardCache {
    struct Sample {
        std::vector<AlignedVector> conv_in;   // input of each conv
        std::vector<AlignedVector> conv_out;  // post-ReLU output of each conv
        std::vector<std::vector<std::uint32_t>> pool_arg;
        AlignedVector flat;
        AlignedVector hidden;  // post-ReLU
        double logit = 0.0;
    };
    std::vector<Sample> samples;
    bool empty() const noexcept { return samples.empty(); }
};

/// Batch of patches as (N, s, s, s) or (N, 1, s, s, s). Returns sigmoid
/// outputs; fills `cache` when given.
std::vector<double> forward(const Cnn3dModel& model, const Tensor& batch, ForwardCache* cache = nullptr,
                            int workers = 1);

/// Raw logits for the batch.
std::vector<double> forward_logits(const Cnn3dModel& model, const Tensor& batch, int workers = 1);

/// Sum over the batch of per-sample binary cross-entropy (clamped logs).
double bce_sum(const std::vector<double>& probs, const std::vector<double>& labels);

/// Gradient of the summed per-sample BCE over the cached batch, one entry
/// per stored parameter value. Per-sample gradients are added in sample order, so a
/// batch holding one sample twice yields exactly twice its gradient; the
/// optimizer divides by the batch size to obtain the mean-loss gradient.
/// Throws InvalidArgument when the cache is empty or sized differently.
std::vector<double> backward(const Cnn3dModel& model, const ForwardCache& cache, const std::vector<double>& labels);

/// Versioned JSON header followed by the raw little-endian f64 weights.
void save_model(const Cnn3dModel& model, const std::string& path);
Cnn3dModel load_model(const std::string& path);

} // namespace livseg::neural
