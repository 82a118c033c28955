#pragma once

#include <optional>
#include <string>
#include <vector>

#include "livseg/ensemble/forest.hpp"
#include "livseg/eval/metrics.hpp"
#include "livseg/neural/cnn.hpp"
#include "livseg/neural/train.hpp"
#include "livseg/pipeline/config.hpp"
#include "livseg/volumes/volume.hpp"

namespace livseg::phantom {
struct Phantom;
}

namespace livseg::pipeline {

/// Failure inside a named stage; the CLI maps it to exit code 3.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error("stage " + stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

struct CaseData {
    std::string id;
    volumes::Volume3D ct;  // HU
    volumes::ProbMap3D p_tumor;
    std::optional<volumes::Mask3D> truth;
    std::optional<volumes::Mask3D> liver;
    std::optional<volumes::ProbMap3D> p_liver;  // preferred intensity reference region
};

CaseData case_from_phantom(const phantom::Phantom& p, std::string id);

struct Models {
    std::optional<ensemble::ForestModel> forest;  // feature_names name its columns
    std::optional<neural::Cnn3dModel> cnn;
};

struct StageRecord {
    std::string stage;
    bool executed = false;
    double seconds = 0.0;
    std::size_t foreground = 0;
    std::size_t components = 0;  // 26-connected
    volumes::Mask3D mask;        // output of this stage
};

struct CaseResult {
    std::string id;
    volumes::Mask3D mask;
    std::vector<StageRecord> stages;
    std::optional<eval::CaseMetrics> metrics;
    std::vector<double> candidate_scores;  // forest probability per candidate
    std::size_t refined_voxels = 0;        // band voxels seen by the CNN
};

inline constexpr const char* kStageNames[] = {"binarize", "morph", "temporal", "radiomics_filter", "cnn_refine"};

/// binarize -> morph -> temporal -> radiomics filter -> CNN refine, each
/// skipped when toggled off; metrics when the case has ground truth.
CaseResult run_case(const CaseData& data, const PipelineConfig& config, const Models& models, int workers = 1);

struct SuiteResult {
    std::vector<CaseResult> cases;
    eval::MetricsReport report;
};

/// Cases run in parallel on config.workers threads.
SuiteResult run_suite(const std::vector<CaseData>& cases, const PipelineConfig& config, const Models& models);

struct ForestTraining {
    ensemble::ForestModel model;
    std::size_t positives = 0;
    std::size_t negatives = 0;
    std::vector<std::string> selected;  // feature names used by the model
};

/// CT as the model stages see it: scaled so the liver median sits at
/// config.intensity_ref_hu (liver from p_liver >= 0.5, else the liver mask),
/// smoothed by config.denoise_sigma_vox, then windowed onto 8-bit levels.
/// Normalized input is only smoothed.
volumes::Volume3D model_input(const CaseData& data, const PipelineConfig& config);

/// The cases followed by config.augment.copies perturbed copies of each,
/// drawn from the master seed.
std::vector<CaseData> augment_cases(const std::vector<CaseData>& cases, const PipelineConfig& config);

/// Regions from the training cases: ground-truth lesions (positive),
/// sampled liver balls (negative) and candidates of the pre-filter stages
/// labelled by overlap with the truth, over the augmented case list.
/// Optional stable feature selection.
ForestTraining train_forest_stage(const std::vector<CaseData>& cases, const PipelineConfig& config);

/// Balanced band patches around each augmented case's tumor boundary.
neural::TrainResult train_cnn_stage(const std::vector<CaseData>& cases, const PipelineConfig& config);

/// Trains whichever models the enabled stages need.
Models train_models(const std::vector<CaseData>& cases, const PipelineConfig& config);

/// JSON manifest: config, its hash, seed, per-case stage timings, mask
/// statistics, output hashes and metrics.
std::string run_manifest(const PipelineConfig& config, const std::vector<CaseResult>& results);

/// FNV-1a over the mask bytes, as 16 hex digits.
std::string mask_hash(const volumes::Mask3D& m);

} // namespace livseg::pipeline
