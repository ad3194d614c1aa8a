#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rfm/config.hpp"
#include "rfm/ensemble.hpp"
#include "rfm/meta.hpp"

namespace rfm {

/// Runs fn(0..n-1) over `workers` threads (0: hardware concurrency). The
/// first exception by index is rethrown after all jobs finish.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

/// A held-out task with its test set.
struct UnseenTask {
    TaskSpec task;
    std::vector<ModelIO> test;
};

UnseenTask draw_unseen_task(ReactorKind kind, int order, int test_samples, const SimConfig& sim,
                            std::uint64_t seed);

struct SweepRow {
    std::string method;
    ReactorKind kind = ReactorKind::Cstr;
    int order = 1;
    int shots = 0;
    int collocations = 0;
    int task_id = 0;
    int seed = 0;
    double test_mse = 0.0;
};

struct AggRow {
    std::string method;
    ReactorKind kind = ReactorKind::Cstr;
    int order = 1;
    int shots = 0;
    int collocations = 0;
    int n = 0;
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation (0 for n = 1)
};

struct SweepResult {
    std::vector<SweepRow> rows;
};

/// Groups by (method, kind, order, shots, collocations) in first-seen order.
std::vector<AggRow> aggregate(std::span<const SweepRow> rows);

void write_raw_csv(std::ostream& os, std::span<const SweepRow> rows);
void write_agg_csv(std::ostream& os, std::span<const AggRow> rows);

/// Checkpoints the sweep methods start from. Null entries are allowed only
/// when no requested method needs them.
struct SweepModels {
    const FoundationModel* reptile = nullptr;
    const FoundationModel* transfer = nullptr;
};

bool method_uses_physics(const std::string& method);

/// Adapted parameters of one method on one task for one shot set.
AdaptResult adapt_method(const std::string& method, const ExperimentConfig& cfg, const SweepModels& models,
                         const UnseenTask& task, const ShotSet& shots, std::uint64_t scratch_seed);

/// Test MSE of one method on one task for one shot set.
double run_method(const std::string& method, const ExperimentConfig& cfg, const SweepModels& models,
                  const UnseenTask& task, const ShotSet& shots, std::uint64_t scratch_seed);

/// Every method x shot count x unseen task x seed. Shot sets are shared by
/// all methods of a (task, seed) cell and nest across shot counts.
SweepResult run_fewshot_sweep(const ExperimentConfig& cfg, const SweepModels& models);

/// Physics-capable methods at cfg.fixed_shots, sweeping the collocation count.
SweepResult run_collocation_sweep(const ExperimentConfig& cfg, const SweepModels& models);

/// The unseen tasks a sweep evaluates for one kind.
UnseenTask unseen_task(const ExperimentConfig& cfg, ReactorKind kind, int task_id);
std::vector<UnseenTask> unseen_tasks(const ExperimentConfig& cfg, ReactorKind kind);
std::uint64_t shot_seed(const ExperimentConfig& cfg, ReactorKind kind, int task_id, int seed);
std::uint64_t scratch_seed(const ExperimentConfig& cfg, int seed);

struct EnsembleTrial {
    ReactorKind kind = ReactorKind::Cstr;
    int trial = 0;
    int true_order = 0;
    EnsembleResult result;
    std::vector<double> test_mse;  // per candidate, in bank order
    double selected_test_mse = 0.0;
};

/// cfg.ensemble.trials tasks per kind; trial r has true order
/// bank_orders[r mod |bank|].
std::vector<EnsembleTrial> run_ensemble_sweep(const ExperimentConfig& cfg, const OrderBank& bank);
SweepResult ensemble_rows(std::span<const EnsembleTrial> trials, int shots, int collocations);

/// (T, CA) trajectory over one sampling period given the period's initial
/// state and held input.
using Predictor = std::function<std::vector<State>(const State&, const ControlInput&)>;

Predictor model_predictor(const RnnParams& params, const NormSpec& norm, ReactorKind kind, int n_out);
Predictor simulator_predictor(const TaskSpec& task, const SimConfig& sim);

struct RolloutResult {
    std::vector<double> time;  // hours, starting at 0
    std::vector<State> truth;
    std::vector<State> predicted;
};

/// Closed loop over the input sequence: each chain starts the next period
/// from its own last state.
RolloutResult rollout(const Predictor& model, const TaskSpec& task, const State& x0,
                      std::span<const ControlInput> inputs, const SimConfig& sim);
void write_rollout_csv(std::ostream& os, const RolloutResult& r);

}  // namespace rfm
