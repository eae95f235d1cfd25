#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace dataecho {

enum class ScheduleKind { constant, linear_decay, warmup_piecewise_exp };

std::string_view to_string(ScheduleKind kind) noexcept;
ScheduleKind parse_schedule_kind(std::string_view name);

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::constant;
  // linear_decay
  std::int64_t decay_steps = 1;
  double final_factor = 1.0;
  // warmup_piecewise_exp
  double warmup_epochs = 0.0;
  std::vector<double> decay_epochs;
  double decay_factor = 0.1;

  void validate() const;
};

/// Learning rate at `step`.
///
/// constant: base_lr. linear_decay: straight line from base_lr down to
/// base_lr * final_factor at decay_steps, flat afterwards.
/// warmup_piecewise_exp: ramps from 0 to base_lr over warmup_epochs, then
/// multiplies by decay_factor at every decay epoch already passed.
double lr_at(const ScheduleSpec& schedule, double base_lr, std::int64_t step, std::int64_t steps_per_epoch);

enum class MomentumRule { sgd_momentum, nesterov };

std::string_view to_string(MomentumRule rule) noexcept;
MomentumRule parse_momentum_rule(std::string_view name);

struct OptimizerSpec {
  MomentumRule rule = MomentumRule::nesterov;
  double momentum = 0.9;
  double base_lr = 0.1;
  ScheduleSpec schedule{};

  void validate() const;
};

struct OptimizerState {
  OptimizerSpec spec;
  std::vector<double> velocity;

  OptimizerState(OptimizerSpec s, std::size_t n_params) : spec(std::move(s)), velocity(n_params, 0.0) {}
};

/// One update with lr = lr_at(schedule, base_lr, step, steps_per_epoch):
///   sgd_momentum  v <- mu v - lr g;  theta <- theta + v
///   nesterov      v <- mu v - lr g;  theta <- theta + mu v - lr g
void optimizer_step(std::span<double> params, OptimizerState& opt, std::span<const double> g, std::int64_t step,
                    std::int64_t steps_per_epoch);

}  // namespace dataecho
