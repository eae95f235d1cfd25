#include "dataecho/timing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dataecho {

void TimingModel::validate() const {
  if (!(t_upstream > 0.0) || !std::isfinite(t_upstream)) throw std::invalid_argument("timing: t_upstream must be > 0");
  if (!(t_downstream > 0.0) || !std::isfinite(t_downstream))
    throw std::invalid_argument("timing: t_downstream must be > 0");
  if (!(echo_overhead >= 0.0)) throw std::invalid_argument("timing: echo_overhead must be >= 0");
  if (!(jitter_scale >= 0.0 && jitter_scale < 1.0)) throw std::invalid_argument("timing: jitter_scale must be in [0, 1)");
}

namespace {
double cycle_with_upstream(const TimingModel& model, double t_up, double e) {
  return std::max(t_up, e * model.t_downstream) + e * model.echo_overhead;
}
}  // namespace

double cycle_time(const TimingModel& model, double e) {
  if (!(e >= 1.0)) throw std::invalid_argument("cycle_time: echo factor must be >= 1");
  return cycle_with_upstream(model, model.t_upstream, e);
}

double downstream_idle_fraction(const TimingModel& model, double e) {
  const double busy = e * (model.t_downstream + model.echo_overhead);
  return std::max(0.0, 1.0 - busy / cycle_time(model, e));
}

double ideal_speedup(const TimingModel& model, double e, std::int64_t fresh_baseline, std::int64_t fresh_echo) {
  if (fresh_baseline <= 0 || fresh_echo <= 0) throw std::invalid_argument("ideal_speedup: fresh counts must be positive");
  return (static_cast<double>(fresh_baseline) * cycle_time(model, 1.0)) /
         (static_cast<double>(fresh_echo) * cycle_time(model, e));
}

double simulate_walltime(const TimingModel& model, double upstream_steps, double e, Rng& rng) {
  if (upstream_steps <= 0.0) return 0.0;
  if (model.jitter_scale == 0.0) return upstream_steps * cycle_time(model, e);
  const auto whole = static_cast<std::int64_t>(std::floor(upstream_steps));
  const double remainder = upstream_steps - static_cast<double>(whole);
  auto jittered = [&] {
    const double scale = 1.0 + model.jitter_scale * (2.0 * unit_double(rng()) - 1.0);
    return cycle_with_upstream(model, model.t_upstream * scale, e);
  };
  double total = 0.0;
  for (std::int64_t i = 0; i < whole; ++i) total += jittered();
  if (remainder > 0.0) total += remainder * jittered();
  return total;
}

}  // namespace dataecho
