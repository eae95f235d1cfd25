#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "dataecho/quasi_random.hpp"
#include "dataecho/timing.hpp"
#include "dataecho/trainer.hpp"

namespace dataecho {

/// One pipeline variant compared within an experiment.
struct Arm {
  std::string name;
  PipelineConfig pipeline;  // dataset_size, feature_dim and rng_seed are filled per trial
};

struct ExperimentConfig {
  TaskSpec task;
  ModelSpec model;
  TargetSpec target;
  std::int64_t budget_fresh = 0;
  std::int64_t eval_every = 25;
  std::vector<Arm> arms;
  OptimizerSpec optimizer;  // schedule lives in optimizer.schedule
  SearchSpace search;
  TimingModel timing;
  std::string output_dir = "out";
  std::uint64_t master_seed = 0;

  void validate() const;
};

/// Thrown for malformed configs; the message names the offending key path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Top-level keys: task, pipeline, optimizer, schedule, search, timing,
/// output_dir, master_seed. `pipeline` is one object or an array of objects,
/// each one arm. Unknown keys are rejected at every level.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Hyperparameter names a search dimension may tune.
const std::vector<std::string_view>& tunable_hyperparameters();

/// Copies `values` (ordered as search.dims) into the optimizer spec.
OptimizerSpec apply_hyperparameters(const OptimizerSpec& base, const std::vector<SearchDim>& dims,
                                    const std::vector<double>& values);

struct TrialResult {
  std::string arm;
  std::int64_t trial_id = 0;
  std::int64_t search_id = 0;
  std::vector<double> hyperparams;  // ordered as search.dims
  RunCounters counters;
  TrialStatus status = TrialStatus::budget_exhausted;
  double best_metric = 0.0;
};

struct SearchOutcome {
  std::int64_t search_id = 0;
  std::optional<std::int64_t> winner_trial_id;
  std::optional<std::int64_t> fresh_examples;
  std::optional<double> simulated_walltime;
  std::vector<bool> boundary_flags;  // per dim, empty without a winner
  std::int64_t diverged_draws = 0;
};

struct Aggregate {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double median = 0.0;
};

struct ArmSummary {
  std::string name;
  EchoInsertion echo_insertion = EchoInsertion::none;
  double echo_factor = 1.0;
  std::vector<SearchOutcome> searches;
  std::int64_t searches_reaching_target = 0;
  std::optional<Aggregate> fresh_examples;      // over searches with a winner
  std::optional<Aggregate> simulated_walltime;  // over searches with a winner
  std::vector<bool> boundary_flags;             // any winner near an edge, per dim
};

struct ExperimentSummary {
  std::vector<std::string> dims;
  std::vector<ArmSummary> arms;
  TimingModel timing;
};

/// Picks per-search winners (fewest fresh examples to target, ties to the
/// lower trial_id) and aggregates across searches. Works from trial rows
/// alone, so the summary can be rebuilt from trials.csv.
ExperimentSummary summarize(const ExperimentConfig& config, const std::vector<TrialResult>& trials);

nlohmann::json summary_to_json(const ExperimentSummary& summary);

struct RunOptions {
  bool deterministic = false;  // single thread, no prefetch
  bool write_files = true;
  bool quiet = false;          // suppress progress on stderr
};

struct ExperimentResult {
  std::vector<TrialResult> trials;  // ordered by arm, then trial_id
  ExperimentSummary summary;
};

/// Runs n_searches searches per arm, each until n_trials non-diverged trials
/// are done (diverged draws are recorded, then replaced by the next point).
/// Writes trials.csv, summary.json and history_<arm>_search<k>.csv for each
/// winner into config.output_dir.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

// ---- trials.csv ----

/// Columns: arm, trial_id, search_id, one per dim, fresh_examples, sgd_steps,
/// examples_emitted, simulated_walltime, status, best_metric.
std::string trials_to_csv(const std::vector<std::string>& dims, const std::vector<TrialResult>& trials);
std::vector<TrialResult> trials_from_csv(const std::vector<std::string>& dims, std::string_view csv);

/// Re-derives summary.json in `dir` from `dir`/trials.csv.
ExperimentSummary report(const ExperimentConfig& config, const std::filesystem::path& dir);

// ---- sweeps ----

enum class SweepAxis { echo_factor, batch_size, buffer_size };

std::string_view to_string(SweepAxis axis) noexcept;
SweepAxis parse_sweep_axis(std::string_view name);

/// Returns `base` with the axis set to `value` on every arm. echo_factor only
/// applies to arms with an echo stage.
ExperimentConfig with_axis_value(const ExperimentConfig& base, SweepAxis axis, double value);

struct SweepPoint {
  double value = 0.0;
  ExperimentSummary summary;
};

/// Runs one experiment per value into <output_dir>/<axis>_<value>/ and writes
/// <output_dir>/sweep_<axis>.csv with one row per (value, arm).
std::vector<SweepPoint> sweep(const ExperimentConfig& base, SweepAxis axis, const std::vector<double>& values,
                              const RunOptions& options = {});

std::string sweep_to_csv(SweepAxis axis, const std::vector<SweepPoint>& points);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace dataecho
