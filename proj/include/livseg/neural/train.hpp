#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "livseg/neural/cnn.hpp"

namespace livseg::neural {

/// Labelled cubic patches stored back to back.
struct PatchSet {
    int patch_size = 0;
    std::vector<double> patches;  // size() * patch_size^3 values
    std::vector<double> labels;   // 0 or 1

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t voxels() const noexcept {
        return static_cast<std::size_t>(patch_size) * patch_size * patch_size;
    }
    void add(const std::vector<double>& patch, double label);
    /// Rows [begin, end) as an (n, s, s, s) tensor.
    Tensor batch(std::size_t begin, std::size_t end) const;
};

struct TrainSchedule {
    int adam_epochs = 30;
    double adam_lr = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int sgd_epochs = 70;
    double sgd_lr = 1e-4;
    double sgd_momentum = 0.9;
    int patience = 10;
    /// 0 picks 32 for patches up to 15^3 and 16 above.
    int batch_size = 0;
    /// Stop as soon as validation accuracy reaches this value.
    std::optional<double> target_val_accuracy;
    int workers = 1;

    int effective_batch(int patch_size) const { return batch_size > 0 ? batch_size : (patch_size <= 15 ? 32 : 16); }
    void validate() const;
};

enum class TrainPhase { Adam, Sgd };

struct EpochRecord {
    int epoch = 0;  // 1-based
    TrainPhase phase = TrainPhase::Adam;
    double train_loss = 0.0;  // mean BCE over the epoch
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainResult {
    Cnn3dModel model;  // weights with the lowest validation loss
    std::vector<EpochRecord> history;
    int best_epoch = 0;
    std::string stop_reason;  // "completed", "patience", "target_accuracy"
    /// Set when the patch size lies outside the range known to converge.
    std::vector<std::string> warnings;
};

/// Mean BCE and accuracy (threshold 0.5) of the model on a patch set.
std::pair<double, double> evaluate(const Cnn3dModel& model, const PatchSet& set, int workers = 1);

/// Adam phase then SGD phase with momentum, shuffling per epoch from the
/// seed. The early-stop counter counts epochs without a new best
/// validation loss and restarts at the phase change.
TrainResult train_patch_cnn(const PatchSet& train, const PatchSet& val, const CnnArchitecture& arch,
                            const TrainSchedule& schedule, std::uint64_t seed);

std::string history_to_csv(const std::vector<EpochRecord>& history);

} // namespace livseg::neural
