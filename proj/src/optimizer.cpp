#include "dataecho/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dataecho {

std::string_view to_string(ScheduleKind kind) noexcept {
  switch (kind) {
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::linear_decay: return "linear_decay";
    case ScheduleKind::warmup_piecewise_exp: return "warmup_piecewise_exp";
  }
  return "?";
}

ScheduleKind parse_schedule_kind(std::string_view name) {
  for (auto k : {ScheduleKind::constant, ScheduleKind::linear_decay, ScheduleKind::warmup_piecewise_exp})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown schedule kind '" + std::string(name) + "'");
}

std::string_view to_string(MomentumRule rule) noexcept {
  return rule == MomentumRule::nesterov ? "nesterov" : "sgd_momentum";
}

MomentumRule parse_momentum_rule(std::string_view name) {
  if (name == "nesterov") return MomentumRule::nesterov;
  if (name == "sgd_momentum") return MomentumRule::sgd_momentum;
  throw std::invalid_argument("unknown optimizer rule '" + std::string(name) + "'");
}

void ScheduleSpec::validate() const {
  if (decay_steps < 1) throw std::invalid_argument("schedule: decay_steps must be >= 1");
  if (!(final_factor > 0.0 && final_factor <= 1.0)) throw std::invalid_argument("schedule: final_factor must be in (0, 1]");
  if (!(warmup_epochs >= 0.0)) throw std::invalid_argument("schedule: warmup_epochs must be >= 0");
  if (!(decay_factor > 0.0)) throw std::invalid_argument("schedule: decay_factor must be > 0");
  for (std::size_t i = 1; i < decay_epochs.size(); ++i)
    if (!(decay_epochs[i] > decay_epochs[i - 1]))
      throw std::invalid_argument("schedule: decay_epochs must be strictly increasing");
}

void OptimizerSpec::validate() const {
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("optimizer: momentum must be in [0, 1)");
  if (!(base_lr > 0.0) || !std::isfinite(base_lr)) throw std::invalid_argument("optimizer: learning_rate must be > 0");
  schedule.validate();
}

double lr_at(const ScheduleSpec& schedule, double base_lr, std::int64_t step, std::int64_t steps_per_epoch) {
  if (step < 0) throw std::invalid_argument("lr_at: step must be >= 0");
  switch (schedule.kind) {
    case ScheduleKind::constant:
      return base_lr;
    case ScheduleKind::linear_decay: {
      const double t = std::min(1.0, static_cast<double>(step) / static_cast<double>(schedule.decay_steps));
      return base_lr * (1.0 - (1.0 - schedule.final_factor) * t);
    }
    case ScheduleKind::warmup_piecewise_exp: {
      const double epoch = static_cast<double>(step) / static_cast<double>(std::max<std::int64_t>(1, steps_per_epoch));
      if (epoch < schedule.warmup_epochs) return base_lr * epoch / schedule.warmup_epochs;
      double lr = base_lr;
      for (double boundary : schedule.decay_epochs)
        if (epoch >= boundary) lr *= schedule.decay_factor;
      return lr;
    }
  }
  return base_lr;
}

void optimizer_step(std::span<double> params, OptimizerState& opt, std::span<const double> g, std::int64_t step,
                    std::int64_t steps_per_epoch) {
  if (params.size() != g.size() || params.size() != opt.velocity.size())
    throw std::invalid_argument("optimizer_step: shape mismatch");
  const double lr = lr_at(opt.spec.schedule, opt.spec.base_lr, step, steps_per_epoch);
  const double mu = opt.spec.momentum;
  auto& v = opt.velocity;
  if (opt.spec.rule == MomentumRule::sgd_momentum) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      v[i] = mu * v[i] - lr * g[i];
      params[i] += v[i];
    }
  } else {
    for (std::size_t i = 0; i < params.size(); ++i) {
      v[i] = mu * v[i] - lr * g[i];
      params[i] += mu * v[i] - lr * g[i];
    }
  }
}

}  // namespace dataecho
