#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "livseg/postproc/postproc.hpp"
#include "livseg/radiomics/sampler.hpp"

namespace livseg::pipeline {

/// Invalid or inconsistent configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

struct Paths {
    std::string ct;           // HU volume
    std::string p_tumor;      // tumor probability map
    std::string p_liver;      // optional liver probability map
    std::string truth;        // optional tumor ground truth for metrics
    std::string liver;        // optional liver mask
    std::string output_dir;
    std::string forest_model;
    std::string cnn_model;
    friend bool operator==(const Paths&, const Paths&) = default;
};

struct StageToggles {
    bool morph = true;
    bool temporal = true;
    bool radiomics_filter = true;
    bool cnn_refine = true;
    friend bool operator==(const StageToggles&, const StageToggles&) = default;
};

/// Sampler settings sized for whole-case training sets.
inline radiomics::SamplerConfig default_pipeline_sampler() {
    radiomics::SamplerConfig s;
    s.r_max = 10;
    s.quota_total = 40;
    return s;
}

struct RadiomicsConfig {
    double tau_rf = 0.5;
    int n_trees = 350;
    bool feature_selection = true;
    std::size_t top_k = 30;
    std::size_t target = 20;
    radiomics::SamplerConfig sampler = default_pipeline_sampler();  // seed comes from the master seed
    friend bool operator==(const RadiomicsConfig&, const RadiomicsConfig&) = default;
};

struct CnnConfig {
    int patch_size = 7;
    std::vector<int> conv_channels{8, 8, 16, 16, 32};
    int fc_hidden = 32;
    double d_max = 6.0;
    int patches_per_case = 1000;  // balanced positives and negatives
    double val_fraction = 0.2;
    int adam_epochs = 20;
    int sgd_epochs = 10;
    int patience = 10;
    int batch_size = 0;           // 0 = 32 up to 15^3 patches, else 16
    friend bool operator==(const CnnConfig&, const CnnConfig&) = default;
};

/// Perturbed copies of each training case (scale * HU + noise) so the
/// models see a range of intensity calibrations.
struct AugmentConfig {
    int copies = 2;
    double noise_max_hu = 10.0;  // sigma drawn from [max / 2, max]
    double scale_max = 0.1;      // copy k of n draws its scale from stratum k of [1 - max, 1 + max]
    friend bool operator==(const AugmentConfig&, const AugmentConfig&) = default;
};

struct PipelineConfig {
    std::uint64_t seed = 0;
    int workers = 1;
    Paths paths;
    StageToggles stages;
    postproc::ThresholdMode threshold_mode = postproc::ThresholdMode::OtsuPerVolume;
    int fixed_tau = 127;
    bool suppress_isolated = false;
    RadiomicsConfig radiomics;
    CnnConfig cnn;
    AugmentConfig augment;
    double denoise_sigma_vox = 1.0;  // Gaussian smoothing of the CT before the model stages
    double intensity_ref_hu = 60.0;  // liver median target before windowing; 0 disables

    /// Throws ConfigError.
    void validate() const;

    /// Canonical JSON; every field is written.
    std::string to_json() const;
    /// Missing keys keep their defaults; unknown keys are a ConfigError.
    static PipelineConfig from_json(const std::string& text);

    /// FNV-1a of the canonical compact JSON, as 16 hex digits.
    std::string hash() const;

    friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);

} // namespace livseg::pipeline
