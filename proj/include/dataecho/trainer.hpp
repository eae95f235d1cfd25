#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "dataecho/model.hpp"
#include "dataecho/optimizer.hpp"
#include "dataecho/pipeline.hpp"
#include "dataecho/timing.hpp"

namespace dataecho {

// ---- synthetic tasks ----

enum class TaskKind { gaussian_classes, linear_regression };

std::string_view to_string(TaskKind kind) noexcept;
TaskKind parse_task_kind(std::string_view name);

struct TaskSpec {
  TaskKind kind = TaskKind::gaussian_classes;
  std::int64_t train_size = 4096;
  std::int64_t eval_size = 2048;
  std::int64_t feature_dim = 16;
  std::int64_t n_classes = 2;
  /// Distance between class means (classification).
  double separation = 3.0;
  /// Per-feature noise std (classification) or target noise std (regression).
  double noise = 1.0;
  /// Variance ratio between the widest and narrowest feature. Dimension j is
  /// scaled by condition^(-j/(2(d-1))), which leaves per-feature signal to
  /// noise unchanged but slows gradient descent on the narrow directions.
  double condition = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct TaskData {
  std::shared_ptr<const Dataset> train;
  std::shared_ptr<const Dataset> eval;
};

/// Train and held-out sets come from independent generator streams of the
/// same distribution, so they never share rows.
TaskData make_task(const TaskSpec& spec);

// ---- training loop ----

struct MetricPoint {
  std::int64_t sgd_steps = 0;
  std::int64_t fresh_examples = 0;
  double value = 0.0;
};

struct RunCounters {
  std::int64_t fresh_examples = 0;
  std::int64_t examples_emitted = 0;
  std::int64_t sgd_steps = 0;
  std::vector<MetricPoint> metric_history;
  std::optional<std::int64_t> reached_target_at_fresh;
  double simulated_walltime = 0.0;
};

/// Walltime of a finished run: one upstream step per fresh batch, each
/// costing cycle_time(model, e) (plus jitter).
double simulate_walltime(const TimingModel& model, const RunCounters& counters, std::int64_t batch_size, double e,
                         Rng& rng);

enum class TrialStatus { reached_target, budget_exhausted, diverged };

std::string_view to_string(TrialStatus status) noexcept;
TrialStatus parse_trial_status(std::string_view name);

struct TargetSpec {
  Metric metric = Metric::accuracy;
  double value = 0.9;

  bool reached(double metric_value) const noexcept {
    return higher_is_better(metric) ? metric_value >= value : metric_value <= value;
  }
};

struct TrainSpec {
  ModelSpec model;
  OptimizerSpec optimizer;
  TargetSpec target;
  /// Stop once this many fresh examples have been read.
  std::int64_t budget_fresh = 0;
  std::int64_t eval_every = 25;
  /// Run the pipeline on a producer thread. Results are identical either way.
  bool prefetch = false;
};

struct TrainOutcome {
  RunCounters counters;
  TrialStatus status = TrialStatus::budget_exhausted;
  /// Best held-out metric seen (NaN for a run that never evaluated).
  double best_metric = 0.0;
};

/// Pulls batches from a fresh pipeline built from `pipeline`, steps the
/// optimizer and evaluates on `eval` every eval_every steps (and at step 0)
/// until the target is met, the fresh-example budget is spent or the loss
/// diverges. Model initialization is seeded from pipeline.rng_seed.
TrainOutcome train_until_target(const PipelineConfig& pipeline, std::shared_ptr<const Dataset> train,
                                const Dataset& eval, const TrainSpec& spec, const TimingModel& timing);

}  // namespace dataecho
