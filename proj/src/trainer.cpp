#include "dataecho/trainer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "dataecho/random.hpp"

namespace dataecho {

std::string_view to_string(TaskKind kind) noexcept {
  return kind == TaskKind::gaussian_classes ? "gaussian_classes" : "linear_regression";
}

TaskKind parse_task_kind(std::string_view name) {
  if (name == "gaussian_classes") return TaskKind::gaussian_classes;
  if (name == "linear_regression") return TaskKind::linear_regression;
  throw std::invalid_argument("unknown task kind '" + std::string(name) + "'");
}

std::string_view to_string(TrialStatus status) noexcept {
  switch (status) {
    case TrialStatus::reached_target: return "reached_target";
    case TrialStatus::budget_exhausted: return "budget_exhausted";
    case TrialStatus::diverged: return "diverged";
  }
  return "?";
}

TrialStatus parse_trial_status(std::string_view name) {
  for (auto s : {TrialStatus::reached_target, TrialStatus::budget_exhausted, TrialStatus::diverged})
    if (to_string(s) == name) return s;
  throw std::invalid_argument("unknown trial status '" + std::string(name) + "'");
}

void TaskSpec::validate() const {
  if (train_size < 1 || eval_size < 1) throw std::invalid_argument("task: train_size and eval_size must be >= 1");
  if (feature_dim < 1) throw std::invalid_argument("task: feature_dim must be >= 1");
  if (kind == TaskKind::gaussian_classes && n_classes < 2) throw std::invalid_argument("task: n_classes must be >= 2");
  if (!(noise >= 0.0) || !(separation >= 0.0)) throw std::invalid_argument("task: noise and separation must be >= 0");
  if (!(condition >= 1.0) || !std::isfinite(condition)) throw std::invalid_argument("task: condition must be >= 1");
}

namespace {

Dataset sample_rows(const TaskSpec& spec, std::int64_t n, const std::vector<double>& structure, Rng& rng) {
  const auto d = static_cast<std::size_t>(spec.feature_dim);
  std::vector<double> scale(d, 1.0);
  if (d > 1)
    for (std::size_t j = 0; j < d; ++j)
      scale[j] = std::pow(spec.condition, -0.5 * static_cast<double>(j) / static_cast<double>(d - 1));
  Dataset out;
  out.feature_dim = d;
  out.features.resize(static_cast<std::size_t>(n) * d);
  out.labels.resize(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    double* x = out.features.data() + static_cast<std::size_t>(i) * d;
    if (spec.kind == TaskKind::gaussian_classes) {
      const auto c = static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(spec.n_classes));
      for (std::size_t j = 0; j < d; ++j) x[j] = scale[j] * (structure[c * d + j] + spec.noise * standard_normal(rng));
      out.labels[static_cast<std::size_t>(i)] = static_cast<double>(c);
    } else {
      double y = structure[d];
      for (std::size_t j = 0; j < d; ++j) {
        const double z = standard_normal(rng);
        x[j] = scale[j] * z;
        y += structure[j] * z;
      }
      out.labels[static_cast<std::size_t>(i)] = y + spec.noise * standard_normal(rng);
    }
  }
  return out;
}

}  // namespace

TaskData make_task(const TaskSpec& spec) {
  spec.validate();
  const auto d = static_cast<std::size_t>(spec.feature_dim);
  Rng structure_rng(derive_seed(spec.seed, {0}));

  // Class means sit on a random simplex-like spread whose pairwise scale is
  // set by `separation`; two classes are exactly +-separation/2 along one
  // random direction. Regression draws true weights and a bias.
  std::vector<double> structure;
  if (spec.kind == TaskKind::gaussian_classes) {
    const auto C = static_cast<std::size_t>(spec.n_classes);
    structure.resize(C * d);
    std::vector<double> dir(d);
    for (std::size_t c = 0; c < C; ++c) {
      double norm = 0.0;
      for (auto& v : dir) {
        v = standard_normal(structure_rng);
        norm += v * v;
      }
      norm = std::sqrt(norm);
      for (std::size_t j = 0; j < d; ++j) structure[c * d + j] = 0.5 * spec.separation * dir[j] / norm;
    }
    if (C == 2)
      for (std::size_t j = 0; j < d; ++j) structure[d + j] = -structure[j];
  } else {
    structure.resize(d + 1);
    for (auto& v : structure) v = standard_normal(structure_rng) / std::sqrt(static_cast<double>(d));
  }

  Rng train_rng(derive_seed(spec.seed, {1}));
  Rng eval_rng(derive_seed(spec.seed, {2}));
  TaskData data;
  data.train = std::make_shared<const Dataset>(sample_rows(spec, spec.train_size, structure, train_rng));
  data.eval = std::make_shared<const Dataset>(sample_rows(spec, spec.eval_size, structure, eval_rng));
  return data;
}

double simulate_walltime(const TimingModel& model, const RunCounters& counters, std::int64_t batch_size, double e,
                         Rng& rng) {
  if (batch_size < 1) throw std::invalid_argument("simulate_walltime: batch_size must be >= 1");
  const double upstream_steps = static_cast<double>(counters.fresh_examples) / static_cast<double>(batch_size);
  return simulate_walltime(model, upstream_steps, e, rng);
}

TrainOutcome train_until_target(const PipelineConfig& pipeline_config, std::shared_ptr<const Dataset> train,
                                const Dataset& eval, const TrainSpec& spec, const TimingModel& timing) {
  spec.optimizer.validate();
  if (spec.eval_every < 1) throw std::invalid_argument("train: eval_every must be >= 1");
  if (static_cast<std::int64_t>(spec.model.feature_dim) != pipeline_config.feature_dim)
    throw std::invalid_argument("train: model feature_dim does not match the pipeline");
  timing.validate();

  TrainOutcome out;
  out.best_metric = std::numeric_limits<double>::quiet_NaN();
  if (spec.budget_fresh <= 0) return out;

  const auto metric = spec.target.metric;
  const bool higher = higher_is_better(metric);
  auto& counters = out.counters;
  ModelState model = init_model(spec.model, pipeline_config.rng_seed);
  OptimizerState opt(spec.optimizer, model.params.size());
  const auto steps_per_epoch =
      std::max<std::int64_t>(1, pipeline_config.dataset_size / pipeline_config.batch_size);

  // Returns true once the target is reached; false on divergence sets status.
  bool diverged = false;
  auto record_eval = [&]() -> bool {
    const double value = evaluate(model, eval, metric);
    if (!std::isfinite(value)) {
      diverged = true;
      return false;
    }
    counters.metric_history.push_back({counters.sgd_steps, counters.fresh_examples, value});
    if (std::isnan(out.best_metric) || (higher ? value > out.best_metric : value < out.best_metric))
      out.best_metric = value;
    if (spec.target.reached(value)) {
      counters.reached_target_at_fresh = counters.fresh_examples;
      return true;
    }
    return false;
  };

  auto finish = [&](TrialStatus status) {
    out.status = status;
    Rng jitter(derive_seed(pipeline_config.rng_seed, {seed_role::kJitter}));
    const double e = pipeline_config.echo_insertion == EchoInsertion::none ? 1.0 : pipeline_config.echo_factor.value();
    counters.simulated_walltime = simulate_walltime(timing, counters, pipeline_config.batch_size, e, jitter);
    return out;
  };

  if (record_eval()) return finish(TrialStatus::reached_target);

  std::unique_ptr<BatchStream> stream;
  {
    Pipeline pipeline(pipeline_config, std::move(train));
    if (spec.prefetch)
      stream = std::make_unique<PrefetchPipeline>(std::move(pipeline));
    else
      stream = std::make_unique<Pipeline>(std::move(pipeline));
  }

  std::int64_t last_eval_step = 0;
  while (counters.fresh_examples < spec.budget_fresh) {
    auto batch = stream->next_batch();
    if (!batch) break;
    auto lg = loss_and_grad(model, batch->examples);
    if (!std::isfinite(lg.loss)) return finish(TrialStatus::diverged);
    optimizer_step(model.params, opt, lg.grad, counters.sgd_steps, steps_per_epoch);
    ++counters.sgd_steps;
    counters.examples_emitted += static_cast<std::int64_t>(batch->examples.size());
    counters.fresh_examples = batch->fresh_reads;
    if (counters.sgd_steps % spec.eval_every == 0) {
      last_eval_step = counters.sgd_steps;
      if (record_eval()) return finish(TrialStatus::reached_target);
      if (diverged) return finish(TrialStatus::diverged);
    }
  }
  if (last_eval_step != counters.sgd_steps) {
    if (record_eval()) return finish(TrialStatus::reached_target);
    if (diverged) return finish(TrialStatus::diverged);
  }
  return finish(TrialStatus::budget_exhausted);
}

}  // namespace dataecho
