#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hlt/trainer/trainer.hpp"

namespace hlt::trainer {

// Run directory layout:
//   config.json                 effective TrainConfig
//   metrics.csv                 one row per optimization step
//   checkpoints/step_NNNNNN/    written at every boundary and after the last step

std::string metrics_header(const std::vector<std::string>& type_names);
std::string metrics_row(const StepStats& stats);

struct MetricsRow {
    int step = 0;
    long long episodes = 0;
    std::optional<double> omega;
    std::vector<double> policy_loss;
    double value_loss = 0.0;
    double entropy = 0.0;
    std::size_t league_size = 0;
    double wall_ms = 0.0;
};

/// Throws CorruptArtifactError on a malformed file.
std::vector<MetricsRow> read_metrics(const std::filesystem::path& path);

std::filesystem::path checkpoint_dir(const std::filesystem::path& run_dir, int step);
/// Highest-step checkpoint in a run, if any.
std::optional<std::filesystem::path> latest_checkpoint(const std::filesystem::path& run_dir);

using StepObserver = std::function<void(const StepStats&, const Trainer&)>;

/// Fresh run into `run_dir` (created; must not already hold a metrics file).
Trainer run_training(const TrainConfig& config, const std::filesystem::path& run_dir,
                     const StepObserver& observer = {});

/// Continues the run that owns `checkpoint` (its grandparent directory):
/// metrics rows after the checkpoint step are discarded, then training runs
/// to `total_steps` (the checkpoint's own setting when absent).
Trainer resume_training(const std::filesystem::path& checkpoint, std::optional<int> total_steps,
                        std::optional<int> workers, const StepObserver& observer = {});

}  // namespace hlt::trainer
