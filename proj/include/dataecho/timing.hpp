#pragma once

#include <cstdint>

#include "dataecho/random.hpp"

namespace dataecho {

/// Per-step costs on either side of the echo insertion point.
///
/// t_upstream is the time to prepare one fresh batch, t_downstream the time
/// of one SGD step. Upstream and downstream run overlapped, so one upstream
/// step feeding e downstream steps takes max{t_upstream, e * t_downstream}.
struct TimingModel {
  double t_upstream = 1.0;
  double t_downstream = 1.0;
  double echo_overhead = 0.0;  // seconds per emission of the echo stage
  double jitter_scale = 0.0;   // t_upstream is scaled by U[1 - j, 1 + j] per step

  /// R, the upstream-to-downstream time ratio.
  double ratio() const noexcept { return t_upstream / t_downstream; }
  /// Echoing is only worthwhile when upstream dominates; other models are
  /// accepted and reported through this flag.
  bool upstream_dominates() const noexcept { return t_upstream >= t_downstream; }

  /// Throws std::invalid_argument for non-positive times or negative knobs.
  void validate() const;
};

/// Time for one upstream step plus e downstream steps:
/// max{t_upstream, e * t_downstream} + e * echo_overhead.
double cycle_time(const TimingModel& model, double e);

/// Fraction of each cycle the downstream side spends waiting for data.
double downstream_idle_fraction(const TimingModel& model, double e);

/// Baseline-to-echo walltime ratio where each run costs
/// (fresh batches) x (its cycle time).
double ideal_speedup(const TimingModel& model, double e, std::int64_t fresh_baseline, std::int64_t fresh_echo);

/// Accumulates cycle times over `upstream_steps` fresh batches (fractional
/// remainders count pro rata), applying per-step multiplicative jitter to
/// t_upstream. Zero jitter gives upstream_steps * cycle_time(model, e).
double simulate_walltime(const TimingModel& model, double upstream_steps, double e, Rng& rng);

}  // namespace dataecho
