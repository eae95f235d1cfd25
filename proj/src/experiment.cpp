#include "dataecho/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "dataecho/parallel.hpp"
#include "dataecho/random.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dataecho {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

const std::vector<std::string_view>& tunable_hyperparameters() {
  static const std::vector<std::string_view> names = {
      "learning_rate", "momentum",     "one_minus_momentum", "decay_steps",      "final_factor",
      "warmup_epochs", "decay_factor", "decay_epoch_first",  "decay_epoch_gap"};
  return names;
}

OptimizerSpec apply_hyperparameters(const OptimizerSpec& base, const std::vector<SearchDim>& dims,
                                    const std::vector<double>& values) {
  OptimizerSpec spec = base;
  auto& sc = spec.schedule;
  std::optional<double> first, gap;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const auto& name = dims[i].name;
    const double v = values.at(i);
    if (name == "learning_rate") spec.base_lr = v;
    else if (name == "momentum") spec.momentum = v;
    else if (name == "one_minus_momentum") spec.momentum = 1.0 - v;
    else if (name == "decay_steps") sc.decay_steps = static_cast<std::int64_t>(std::llround(v));
    else if (name == "final_factor") sc.final_factor = v;
    else if (name == "warmup_epochs") sc.warmup_epochs = v;
    else if (name == "decay_factor") sc.decay_factor = v;
    else if (name == "decay_epoch_first") first = v;
    else if (name == "decay_epoch_gap") gap = v;
    else throw std::invalid_argument("unknown hyperparameter '" + name + "'");
  }
  if (first || gap) {
    const double a = first.value_or(sc.decay_epochs.empty() ? 0.0 : sc.decay_epochs[0]);
    const double g = gap.value_or(sc.decay_epochs.size() > 1 ? sc.decay_epochs[1] - sc.decay_epochs[0] : 0.0);
    sc.decay_epochs = g > 0.0 ? std::vector<double>{a, a + g} : std::vector<double>{a};
  }
  return spec;
}

namespace {

void log_progress(const RunOptions& options, const std::string& line) {
  if (!options.quiet) std::cerr << line << '\n';
}

std::uint64_t search_sequence_seed(std::uint64_t master, std::int64_t search_id) {
  return derive_seed(master, {0x5ea4c4ULL, static_cast<std::uint64_t>(search_id)});
}

// Seeds are paired across arms: draw k of search s uses the same pipeline
// and initialization seed in every arm.
std::uint64_t trial_seed(std::uint64_t master, std::int64_t search_id, std::int64_t draw) {
  return derive_seed(master, {0x74e1a1ULL, static_cast<std::uint64_t>(search_id), static_cast<std::uint64_t>(draw)});
}

Aggregate aggregate(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  Aggregate a;
  a.min = values.front();
  a.max = values.back();
  double sum = 0.0;
  for (double v : values) sum += v;
  a.mean = sum / static_cast<double>(values.size());
  const auto n = values.size();
  a.median = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  // Guard the min <= mean <= max invariant against rounding in the sum.
  a.mean = std::clamp(a.mean, a.min, a.max);
  return a;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << contents;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string history_csv(const RunCounters& c) {
  std::ostringstream os;
  os << "sgd_steps,fresh_examples,metric\n";
  for (const auto& p : c.metric_history) os << p.sgd_steps << ',' << p.fresh_examples << ',' << format_double(p.value) << '\n';
  return os.str();
}

}  // namespace

ExperimentSummary summarize(const ExperimentConfig& config, const std::vector<TrialResult>& trials) {
  ExperimentSummary summary;
  summary.timing = config.timing;
  for (const auto& d : config.search.dims) summary.dims.push_back(d.name);
  const auto n_dims = config.search.dims.size();

  for (const auto& arm : config.arms) {
    ArmSummary as;
    as.name = arm.name;
    as.echo_insertion = arm.pipeline.echo_insertion;
    as.echo_factor = arm.pipeline.echo_insertion == EchoInsertion::none ? 1.0 : arm.pipeline.echo_factor.value();
    as.boundary_flags.assign(n_dims, false);
    std::vector<double> fresh, wall;
    for (std::int64_t s = 0; s < config.search.n_searches; ++s) {
      SearchOutcome so;
      so.search_id = s;
      const TrialResult* best = nullptr;
      for (const auto& t : trials) {
        if (t.arm != arm.name || t.search_id != s) continue;
        if (t.status == TrialStatus::diverged) ++so.diverged_draws;
        if (t.status != TrialStatus::reached_target) continue;
        const auto f = t.counters.fresh_examples;
        if (!best || f < best->counters.fresh_examples ||
            (f == best->counters.fresh_examples && t.trial_id < best->trial_id))
          best = &t;
      }
      if (best) {
        so.winner_trial_id = best->trial_id;
        so.fresh_examples = best->counters.fresh_examples;
        so.simulated_walltime = best->counters.simulated_walltime;
        so.boundary_flags.resize(n_dims);
        for (std::size_t d = 0; d < n_dims; ++d) {
          const double u = unit_position(config.search.dims[d], best->hyperparams.at(d));
          so.boundary_flags[d] = u <= 0.05 || u >= 0.95;
          if (so.boundary_flags[d]) as.boundary_flags[d] = true;
        }
        fresh.push_back(static_cast<double>(*so.fresh_examples));
        wall.push_back(*so.simulated_walltime);
        ++as.searches_reaching_target;
      }
      as.searches.push_back(std::move(so));
    }
    if (!fresh.empty()) {
      as.fresh_examples = aggregate(fresh);
      as.simulated_walltime = aggregate(wall);
    }
    summary.arms.push_back(std::move(as));
  }
  return summary;
}

nlohmann::json summary_to_json(const ExperimentSummary& summary) {
  using nlohmann::json;
  auto agg = [](const std::optional<Aggregate>& a) -> json {
    if (!a) return nullptr;
    return json{{"mean", a->mean}, {"min", a->min}, {"max", a->max}, {"median", a->median}};
  };
  auto flags = [&](const std::vector<bool>& f) {
    json out = json::object();
    for (std::size_t d = 0; d < f.size(); ++d) out[summary.dims[d]] = static_cast<bool>(f[d]);
    return out;
  };
  json arms = json::array();
  const ArmSummary* ref = summary.arms.empty() ? nullptr : &summary.arms.front();
  for (const auto& a : summary.arms) {
    json searches = json::array();
    for (const auto& s : a.searches) {
      json js{{"search_id", s.search_id}, {"diverged_draws", s.diverged_draws}};
      js["winner_trial_id"] = s.winner_trial_id ? json(*s.winner_trial_id) : json(nullptr);
      js["fresh_examples"] = s.fresh_examples ? json(*s.fresh_examples) : json(nullptr);
      js["simulated_walltime"] = s.simulated_walltime ? json(*s.simulated_walltime) : json(nullptr);
      js["boundary_flags"] = s.boundary_flags.empty() ? json(nullptr) : flags(s.boundary_flags);
      searches.push_back(std::move(js));
    }
    json ja{{"name", a.name},
            {"echo_insertion", std::string(to_string(a.echo_insertion))},
            {"echo_factor", a.echo_factor},
            {"searches_reaching_target", a.searches_reaching_target},
            {"fresh_examples", agg(a.fresh_examples)},
            {"simulated_walltime", agg(a.simulated_walltime)},
            {"boundary_flags", flags(a.boundary_flags)},
            {"searches", std::move(searches)}};
    json rel = nullptr;
    if (ref && ref->fresh_examples && a.fresh_examples) {
      rel = json{{"reference_arm", ref->name},
                 {"fresh_ratio", ref->fresh_examples->mean / a.fresh_examples->mean},
                 {"walltime_speedup", ref->simulated_walltime->mean / a.simulated_walltime->mean}};
    }
    ja["relative_to_reference"] = std::move(rel);
    arms.push_back(std::move(ja));
  }
  const auto& t = summary.timing;
  return json{{"dims", summary.dims},
              {"timing",
               {{"t_upstream", t.t_upstream},
                {"t_downstream", t.t_downstream},
                {"echo_overhead", t.echo_overhead},
                {"jitter_scale", t.jitter_scale},
                {"ratio", t.ratio()},
                {"upstream_dominates", t.upstream_dominates()}}},
              {"arms", std::move(arms)}};
}

std::string trials_to_csv(const std::vector<std::string>& dims, const std::vector<TrialResult>& trials) {
  std::ostringstream os;
  os << "arm,trial_id,search_id";
  for (const auto& d : dims) os << ',' << d;
  os << ",fresh_examples,sgd_steps,examples_emitted,simulated_walltime,status,best_metric\n";
  for (const auto& t : trials) {
    os << t.arm << ',' << t.trial_id << ',' << t.search_id;
    for (double v : t.hyperparams) os << ',' << format_double(v);
    os << ',' << t.counters.fresh_examples << ',' << t.counters.sgd_steps << ',' << t.counters.examples_emitted << ','
       << format_double(t.counters.simulated_walltime) << ',' << to_string(t.status) << ','
       << format_double(t.best_metric) << '\n';
  }
  return os.str();
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view s, std::size_t line_no) {
  T v{};
  if (std::is_floating_point_v<T> && s == "nan") return static_cast<T>(std::nan(""));
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw std::runtime_error("trials.csv line " + std::to_string(line_no) + ": bad number '" + std::string(s) + "'");
  return v;
}

}  // namespace

std::vector<TrialResult> trials_from_csv(const std::vector<std::string>& dims, std::string_view csv) {
  const auto lines = split(csv, '\n');
  if (lines.empty()) throw std::runtime_error("trials.csv: empty");
  const auto header = split(lines[0], ',');
  const std::size_t cols = 3 + dims.size() + 6;
  if (header.size() != cols) throw std::runtime_error("trials.csv: header does not match the configured search dims");
  for (std::size_t d = 0; d < dims.size(); ++d)
    if (header[3 + d] != dims[d]) throw std::runtime_error("trials.csv: unexpected column '" + std::string(header[3 + d]) + "'");
  std::vector<TrialResult> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split(lines[i], ',');
    if (f.size() != cols) throw std::runtime_error("trials.csv line " + std::to_string(i + 1) + ": wrong column count");
    TrialResult t;
    t.arm = std::string(f[0]);
    t.trial_id = parse_number<std::int64_t>(f[1], i + 1);
    t.search_id = parse_number<std::int64_t>(f[2], i + 1);
    for (std::size_t d = 0; d < dims.size(); ++d) t.hyperparams.push_back(parse_number<double>(f[3 + d], i + 1));
    std::size_t k = 3 + dims.size();
    t.counters.fresh_examples = parse_number<std::int64_t>(f[k++], i + 1);
    t.counters.sgd_steps = parse_number<std::int64_t>(f[k++], i + 1);
    t.counters.examples_emitted = parse_number<std::int64_t>(f[k++], i + 1);
    t.counters.simulated_walltime = parse_number<double>(f[k++], i + 1);
    t.status = parse_trial_status(f[k++]);
    t.best_metric = parse_number<double>(f[k++], i + 1);
    if (t.status == TrialStatus::reached_target) t.counters.reached_target_at_fresh = t.counters.fresh_examples;
    out.push_back(std::move(t));
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const auto task = make_task(config.task);
  const auto& space = config.search;
  const auto n_trials = space.n_trials;
  // Each search may draw this many points before giving up on divergence.
  const std::int64_t max_draws = 20 * n_trials;

  TrainSpec train_spec;
  train_spec.model = config.model;
  train_spec.target = config.target;
  train_spec.budget_fresh = config.budget_fresh;
  train_spec.eval_every = config.eval_every;
  train_spec.prefetch = !options.deterministic;

  ExperimentResult result;
  std::map<std::pair<std::string, std::int64_t>, RunCounters> histories;

#ifdef _OPENMP
  const int threads = options.deterministic ? 1 : omp_get_max_threads();
#endif

  for (const auto& arm : config.arms) {
    std::int64_t next_trial_id = 0;
    for (std::int64_t s = 0; s < space.n_searches; ++s) {
      const ScrambledHalton sequence(space.dims.size(), search_sequence_seed(config.master_seed, s));
      std::int64_t accepted = 0;
      std::int64_t draw = 0;
      while (accepted < n_trials) {
        if (draw >= max_draws)
          throw std::runtime_error("arm " + arm.name + " search " + std::to_string(s) + ": more than " +
                                   std::to_string(max_draws) + " draws needed to find non-diverged trials");
        const std::int64_t wave = std::min(n_trials - accepted, max_draws - draw);
        std::vector<TrialResult> batch(static_cast<std::size_t>(wave));
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(wave));
#pragma omp parallel for schedule(dynamic) num_threads(threads)
        for (std::int64_t w = 0; w < wave; ++w) {
          const auto k = draw + w;
          auto& t = batch[static_cast<std::size_t>(w)];
          t.arm = arm.name;
          t.search_id = s;
          auto u = sequence.point(static_cast<std::uint64_t>(k));
          for (std::size_t d = 0; d < u.size(); ++d) u[d] = map_unit(space.dims[d], u[d]);
          t.hyperparams = u;
          PipelineConfig pc = arm.pipeline;
          pc.rng_seed = trial_seed(config.master_seed, s, k);
          TrainSpec ts = train_spec;
          ts.optimizer = apply_hyperparameters(config.optimizer, space.dims, u);
          try {
            ts.optimizer.validate();
            auto outcome = train_until_target(pc, task.train, *task.eval, ts, config.timing);
            t.counters = std::move(outcome.counters);
            t.status = outcome.status;
            t.best_metric = outcome.best_metric;
          } catch (const std::invalid_argument&) {
            // A point the optimizer cannot run (e.g. momentum pushed to 1) counts as diverged.
            t.status = TrialStatus::diverged;
            t.best_metric = std::nan("");
          } catch (...) {
            errors[static_cast<std::size_t>(w)] = std::current_exception();
          }
        }
        for (const auto& e : errors)
          if (e) std::rethrow_exception(e);
        for (auto& t : batch) {
          t.trial_id = next_trial_id++;
          if (t.status != TrialStatus::diverged) ++accepted;
          result.trials.push_back(std::move(t));
        }
        draw += wave;
      }
      log_progress(options, "[" + arm.name + "] search " + std::to_string(s + 1) + "/" +
                                std::to_string(space.n_searches) + " done after " + std::to_string(draw) + " draws");
    }
  }

  result.summary = summarize(config, result.trials);

  if (options.write_files) {
    const std::filesystem::path dir = config.output_dir;
    std::filesystem::create_directories(dir);
    write_file(dir / "trials.csv", trials_to_csv(result.summary.dims, result.trials));
    write_file(dir / "summary.json", summary_to_json(result.summary).dump(2) + "\n");
    for (const auto& arm : result.summary.arms)
      for (const auto& s : arm.searches) {
        if (!s.winner_trial_id) continue;
        const auto it = std::find_if(result.trials.begin(), result.trials.end(), [&](const TrialResult& t) {
          return t.arm == arm.name && t.trial_id == *s.winner_trial_id;
        });
        write_file(dir / ("history_" + arm.name + "_search" + std::to_string(s.search_id) + ".csv"),
                   history_csv(it->counters));
      }
    log_progress(options, "wrote " + (dir / "trials.csv").string() + " and summary.json");
  }
  return result;
}

ExperimentSummary report(const ExperimentConfig& config, const std::filesystem::path& dir) {
  std::ifstream in(dir / "trials.csv", std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + (dir / "trials.csv").string());
  std::stringstream buf;
  buf << in.rdbuf();
  std::vector<std::string> dims;
  for (const auto& d : config.search.dims) dims.push_back(d.name);
  const auto trials = trials_from_csv(dims, buf.str());
  auto summary = summarize(config, trials);
  write_file(dir / "summary.json", summary_to_json(summary).dump(2) + "\n");
  return summary;
}

std::string_view to_string(SweepAxis axis) noexcept {
  switch (axis) {
    case SweepAxis::echo_factor: return "echo_factor";
    case SweepAxis::batch_size: return "batch_size";
    case SweepAxis::buffer_size: return "buffer_size";
  }
  return "?";
}

SweepAxis parse_sweep_axis(std::string_view name) {
  for (auto a : {SweepAxis::echo_factor, SweepAxis::batch_size, SweepAxis::buffer_size})
    if (to_string(a) == name) return a;
  throw std::invalid_argument("unknown sweep axis '" + std::string(name) + "'");
}

ExperimentConfig with_axis_value(const ExperimentConfig& base, SweepAxis axis, double value) {
  ExperimentConfig cfg = base;
  for (auto& arm : cfg.arms) {
    auto& p = arm.pipeline;
    switch (axis) {
      case SweepAxis::echo_factor:
        if (p.echo_insertion != EchoInsertion::none) p.echo_factor = EchoFactor(value);
        break;
      case SweepAxis::batch_size:
        p.batch_size = static_cast<std::int64_t>(std::llround(value));
        break;
      case SweepAxis::buffer_size:
        p.shuffle_buffer_size = static_cast<std::int64_t>(std::llround(value));
        break;
    }
  }
  return cfg;
}

std::string sweep_to_csv(SweepAxis axis, const std::vector<SweepPoint>& points) {
  std::ostringstream os;
  os << to_string(axis)
     << ",arm,searches_reaching_target,mean_fresh,min_fresh,max_fresh,median_fresh,mean_walltime\n";
  for (const auto& pt : points)
    for (const auto& a : pt.summary.arms) {
      os << format_double(pt.value) << ',' << a.name << ',' << a.searches_reaching_target;
      if (a.fresh_examples) {
        const auto& f = *a.fresh_examples;
        os << ',' << format_double(f.mean) << ',' << format_double(f.min) << ',' << format_double(f.max) << ','
           << format_double(f.median) << ',' << format_double(a.simulated_walltime->mean) << '\n';
      } else {
        os << ",,,,,\n";
      }
    }
  return os.str();
}

std::vector<SweepPoint> sweep(const ExperimentConfig& base, SweepAxis axis, const std::vector<double>& values,
                              const RunOptions& options) {
  if (values.empty()) throw std::invalid_argument("sweep: no values given");
  std::vector<SweepPoint> points;
  for (double v : values) {
    auto cfg = with_axis_value(base, axis, v);
    cfg.output_dir = (std::filesystem::path(base.output_dir) / (std::string(to_string(axis)) + "_" + format_double(v))).string();
    log_progress(options, "sweep " + std::string(to_string(axis)) + " = " + format_double(v));
    auto res = run_experiment(cfg, options);
    points.push_back({v, std::move(res.summary)});
  }
  if (options.write_files) {
    std::filesystem::create_directories(base.output_dir);
    write_file(std::filesystem::path(base.output_dir) / ("sweep_" + std::string(to_string(axis)) + ".csv"),
               sweep_to_csv(axis, points));
  }
  return points;
}

}  // namespace dataecho
