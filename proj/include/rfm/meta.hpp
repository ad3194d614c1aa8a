#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfm/checkpoint.hpp"
#include "rfm/physics_loss.hpp"
#include "rfm/rnn.hpp"
#include "rfm/sim.hpp"
#include "rfm/tasks.hpp"

namespace rfm {

struct MetaConfig {
    std::vector<TaskFamily> families;  // kinds, orders and task counts
    int samples_per_task = 200;
    int n_epochs = 5;
    int batch_size = 32;
    double epsilon = 1.0;
    AdamConfig adam;
    Architecture arch;
    SimConfig sim;
    std::uint64_t seed = 0;

    int n_tasks() const;
};

/// One simulated meta-training task.
struct TaskData {
    TaskSpec task;
    std::vector<ModelIO> samples;
};

/// Draws and simulates `count` tasks per family. Tasks whose simulations are
/// mostly rejected are redrawn with a fresh parameter set.
std::vector<TaskData> build_task_pool(const MetaConfig& cfg);

/// Draws one feasible task and its dataset, redrawing parameters on
/// TaskInfeasible. `seed` fixes the whole sequence of attempts.
TaskData draw_feasible_task(ReactorKind kind, int order, int n_samples, const SimConfig& sim, std::uint64_t seed);

/// Mean squared error of the network over the samples.
double evaluate_mse(const RnnParams& params, std::span<const ModelIO> samples);

/// Adam on the data MSE over shuffled mini-batches; returns a trained copy.
RnnParams inner_train(const RnnParams& params, std::span<const ModelIO> data, int epochs, int batch_size,
                      const AdamConfig& adam, std::uint64_t seed);

/// eps * (1 - iteration / n_tasks), iterations counted from 1.
double reptile_alpha(double epsilon, int iteration, int n_tasks);

/// theta + alpha (W - theta) on the flat parameter vector.
RnnParams reptile_step(const RnnParams& theta, const RnnParams& W, double alpha);

struct MetricsRow {
    int iteration = 0;
    std::string kind;  // reactor kind, or "pooled"
    int order = 1;
    LossBreakdown loss;
};

void write_metrics_header(std::ostream& os);
void write_metrics_row(std::ostream& os, const MetricsRow& row);

struct TrainIo {
    std::ostream* metrics = nullptr;
    /// Written with the last good parameters if training hits a NumericalError.
    std::optional<std::filesystem::path> abort_checkpoint;
};

FoundationModel meta_train(const MetaConfig& cfg, std::span<const TaskData> pool, const TrainIo& io = {});

/// Pooled Adam training over every sample of every task.
FoundationModel transfer_pretrain(const MetaConfig& cfg, std::span<const TaskData> pool, const TrainIo& io = {});

enum class AdaptMode { DataOnly, PhysicsInformed };

/// Plateau detector for collocation resampling: fires when the total loss
/// has not dropped by `rel_tol` (relative) over the last `patience` epochs,
/// at most once per window.
struct ResampleHook {
    bool enabled = false;
    int patience = 20;
    double rel_tol = 1.0e-2;

    bool should_resample(std::span<const LossBreakdown> trace, int last_resample_epoch) const;
};

struct AdaptConfig {
    int epochs = 200;
    LossWeights weights;
    AdaptMode mode = AdaptMode::PhysicsInformed;
    AdamConfig adam;
    ResampleHook resample;
};

/// What adaptation needs to know about the target task.
struct AdaptTarget {
    ReactorKind kind = ReactorKind::Cstr;
    NormSpec norm;
    EstimatedParams est;
    ResidualScale scale;
    double dt = 0.0;  // residual stencil step, dt_sample / n_out
    int n_out = 10;
    /// Supplies a fresh collocation set when the resample hook fires.
    std::function<std::vector<OperatingPoint>(int)> redraw_collocation;
};

AdaptTarget make_adapt_target(const TaskSpec& task, const SimConfig& sim,
                              ResidualUnits units = ResidualUnits::Physical);

struct AdaptResult {
    RnnParams params;
    std::vector<LossBreakdown> trace;  // loss before each update
    int resamples = 0;
};

/// Full-batch fine-tuning of a copy of `start` on the shots, plus the
/// collocation residuals in physics mode.
AdaptResult adapt(const RnnParams& start, const ShotSet& shots, const AdaptTarget& target, const AdaptConfig& cfg);

/// Randomly initialized network trained like adapt(); needs K >= 1.
AdaptResult train_scratch(const Architecture& arch, std::uint64_t init_seed, const ShotSet& shots,
                          const AdaptTarget& target, const AdaptConfig& cfg);

}  // namespace rfm
