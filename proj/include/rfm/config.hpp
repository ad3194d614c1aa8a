#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rfm/meta.hpp"
#include "rfm/reactor.hpp"

namespace rfm {

enum class Scale { Desk, Paper };

struct MetaSettings {
    std::vector<ReactorKind> kinds{ReactorKind::Cstr, ReactorKind::Batch, ReactorKind::Pfr};
    int tasks_per_kind = 30;
    int samples_per_task = 200;
    int n_epochs = 5;
    int batch_size = 32;
    double epsilon = 1.0;
    double lr = 1.0e-3;
};

struct AdaptSettings {
    int epochs = 200;
    double lr = 1.0e-3;
    LossWeights weights;
    ResidualUnits residual_units = ResidualUnits::Physical;
    ResampleHook resample;
};

struct EnsembleSettings {
    std::vector<int> bank_orders{1, 2, 3};
    int trials = 5;
};

struct RolloutSettings {
    int periods = 20;
};

struct PathSettings {
    std::filesystem::path out = "out";
    std::filesystem::path foundation;  // default <out>/foundation.ckpt
    std::filesystem::path transfer;    // default <out>/transfer.ckpt
    std::filesystem::path bank_dir;    // default <out>; files bank_order<m>.ckpt
};

struct ExperimentConfig {
    std::string experiment = "fewshot_sweep";
    std::uint64_t seed = 0;
    std::vector<ReactorKind> kinds{ReactorKind::Cstr};  // evaluated kinds
    std::array<int, 3> orders{2, 1, 1};                 // fixed reaction order per kind
    std::vector<std::string> methods{"scratch-data", "transfer", "reptile-data", "scratch-physics",
                                     "reptile-physics"};
    std::vector<int> shot_grid{1, 2, 5, 10, 15, 20, 30, 40, 50};
    std::vector<int> collocation_grid{10, 20, 40, 80, 100, 160};
    int fixed_shots = 10;
    int fixed_collocations = 100;
    int n_unseen_tasks = 5;
    int n_seeds = 3;
    int test_samples = 500;
    int workers = 0;  // 0: one per hardware thread
    MetaSettings meta;
    AdaptSettings adapt;
    SimConfig sim;
    EnsembleSettings ensemble;
    RolloutSettings rollout;
    PathSettings paths;

    int order(ReactorKind k) const { return orders[static_cast<std::size_t>(k)]; }

    std::filesystem::path foundation_path() const;
    std::filesystem::path transfer_path() const;
    std::filesystem::path bank_path(int order) const;

    /// Reptile/transfer training setup. With `order` > 0 every kind uses that
    /// order (order-bank models); otherwise the per-kind orders.
    MetaConfig meta_config(int order = 0) const;
    AdaptConfig adapt_config(AdaptMode mode) const;
};

ExperimentConfig preset(Scale scale);

/// Applies the JSON object on top of `base`. Every key must name a field;
/// anything else raises ConfigError.
ExperimentConfig parse_config(const std::string& json_text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});
std::string config_to_json(const ExperimentConfig& cfg);

void validate(const ExperimentConfig& cfg);

}  // namespace rfm
