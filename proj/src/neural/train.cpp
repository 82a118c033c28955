#include "livseg/neural/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cnn_internal.hpp"
#include "livseg/core/format.hpp"
#include "livseg/core/rng.hpp"

namespace livseg::neural {

void PatchSet::add(const std::vector<double>& patch, double label) {
    if (patch.size() != voxels()) throw InvalidArgument("PatchSet::add: patch has the wrong size");
    patches.insert(patches.end(), patch.begin(), patch.end());
    labels.push_back(label);
}

Tensor PatchSet::batch(std::size_t begin, std::size_t end) const {
    if (begin > end || end > size()) throw InvalidArgument("PatchSet::batch: range out of bounds");
    const auto v = voxels();
    return Tensor({static_cast<int>(end - begin), patch_size, patch_size, patch_size},
                  std::vector<double>(patches.begin() + begin * v, patches.begin() + end * v));
}

void TrainSchedule::validate() const {
    if (adam_epochs < 0 || sgd_epochs < 0 || adam_epochs + sgd_epochs <= 0)
        throw InvalidArgument("training needs a positive number of epochs");
    if (batch_size < 0) throw InvalidArgument("batch size must be positive");
    if (!(adam_lr > 0.0) || !(sgd_lr > 0.0)) throw InvalidArgument("learning rates must be positive");
    if (patience < 1) throw InvalidArgument("patience must be at least 1");
}

std::pair<double, double> evaluate(const Cnn3dModel& model, const PatchSet& set, int workers) {
    if (set.size() == 0) throw InvalidArgument("evaluate: empty patch set");
    const auto p = forward(model, set.batch(0, set.size()), nullptr, workers);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if ((p[i] >= 0.5) == (set.labels[i] >= 0.5)) ++correct;
    return {bce_sum(p, set.labels) / static_cast<double>(p.size()),
            static_cast<double>(correct) / static_cast<double>(p.size())};
}

namespace {

void check_set(const PatchSet& s, int patch_size, const char* what) {
    if (s.size() == 0) throw InvalidArgument(std::string("train_patch_cnn: empty ") + what + " set");
    if (s.patch_size != patch_size)
        throw InvalidArgument(std::string("train_patch_cnn: ") + what + " patch size does not match the model");
    if (s.patches.size() != s.size() * s.voxels())
        throw InvalidArgument(std::string("train_patch_cnn: ") + what + " set is inconsistent");
}

} // namespace

TrainResult train_patch_cnn(const PatchSet& train, const PatchSet& val, const CnnArchitecture& arch,
                            const TrainSchedule& schedule, std::uint64_t seed) {
    schedule.validate();
    arch.validate();
    check_set(train, arch.patch_size, "training");
    check_set(val, arch.patch_size, "validation");
    const bool has_pos = std::any_of(train.labels.begin(), train.labels.end(), [](double l) { return l >= 0.5; });
    const bool has_neg = std::any_of(train.labels.begin(), train.labels.end(), [](double l) { return l < 0.5; });
    if (!has_pos || !has_neg) throw InvalidArgument("train_patch_cnn: training set needs both labels");

    TrainResult res;
    if (arch.patch_size > 21)
        res.warnings.push_back("patch size " + std::to_string(arch.patch_size) +
                               " exceeds 21; training at this size is known to fail to converge");

    Cnn3dModel model = Cnn3dModel::initialized(arch, seed);
    const std::size_t np = model.params().size();
    const std::size_t n = train.size();
    const std::size_t v = train.voxels();
    const auto bs = static_cast<std::size_t>(schedule.effective_batch(arch.patch_size));

    std::vector<double> m(np, 0.0), s2(np, 0.0), vel(np, 0.0), grad;
    std::vector<double> batch_x, batch_y;
    long adam_step = 0;
    double best = std::numeric_limits<double>::infinity();
    int since_best = 0;
    res.model = model;
    res.stop_reason = "completed";

    const int total = schedule.adam_epochs + schedule.sgd_epochs;
    for (int epoch = 1; epoch <= total; ++epoch) {
        const TrainPhase phase = epoch <= schedule.adam_epochs ? TrainPhase::Adam : TrainPhase::Sgd;
        if (epoch == schedule.adam_epochs + 1) since_best = 0;

        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        Rng rng = make_stream(seed, "cnn.shuffle", {static_cast<std::uint64_t>(epoch)});
        std::shuffle(order.begin(), order.end(), rng);

        double epoch_loss = 0.0;
        for (std::size_t b0 = 0; b0 < n; b0 += bs) {
            const std::size_t b1 = std::min(n, b0 + bs);
            const std::size_t nb = b1 - b0;
            batch_x.resize(nb * v);
            batch_y.resize(nb);
            for (std::size_t i = 0; i < nb; ++i) {
                std::copy_n(train.patches.begin() + order[b0 + i] * v, v, batch_x.begin() + i * v);
                batch_y[i] = train.labels[order[b0 + i]];
            }
            epoch_loss += detail::batch_gradient(model, batch_x.data(), batch_y.data(), nb, schedule.workers, grad);
            const double inv = 1.0 / static_cast<double>(nb);
            auto& w = model.params();
            if (phase == TrainPhase::Adam) {
                ++adam_step;
                const double c1 = 1.0 - std::pow(schedule.adam_beta1, static_cast<double>(adam_step));
                const double c2 = 1.0 - std::pow(schedule.adam_beta2, static_cast<double>(adam_step));
                for (std::size_t k = 0; k < np; ++k) {
                    const double g = grad[k] * inv;
                    m[k] = schedule.adam_beta1 * m[k] + (1.0 - schedule.adam_beta1) * g;
                    s2[k] = schedule.adam_beta2 * s2[k] + (1.0 - schedule.adam_beta2) * g * g;
                    w[k] -= schedule.adam_lr * (m[k] / c1) / (std::sqrt(s2[k] / c2) + schedule.adam_eps);
                }
            } else {
                for (std::size_t k = 0; k < np; ++k) {
                    vel[k] = schedule.sgd_momentum * vel[k] + grad[k] * inv;
                    w[k] -= schedule.sgd_lr * vel[k];
                }
            }
        }

        const auto [vl, va] = evaluate(model, val, schedule.workers);
        res.history.push_back({epoch, phase, epoch_loss / static_cast<double>(n), vl, va});
        if (vl < best) {
            best = vl;
            since_best = 0;
            res.model = model;
            res.best_epoch = epoch;
        } else {
            ++since_best;
        }
        if (schedule.target_val_accuracy && va >= *schedule.target_val_accuracy) {
            res.stop_reason = "target_accuracy";
            break;
        }
        if (since_best >= schedule.patience) {
            res.stop_reason = "patience";
            break;
        }
    }
    return res;
}

std::string history_to_csv(const std::vector<EpochRecord>& history) {
    std::ostringstream os;
    os << "epoch,phase,train_loss,val_loss,val_accuracy\n";
    for (const auto& r : history)
        os << r.epoch << ',' << (r.phase == TrainPhase::Adam ? "adam" : "sgd") << ',' << format_double(r.train_loss)
           << ',' << format_double(r.val_loss) << ',' << format_double(r.val_accuracy) << '\n';
    return os.str();
}

} // namespace livseg::neural
