#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "dataecho/experiment.hpp"

namespace dataecho {

namespace {

using nlohmann::json;

// Reads fields from one JSON object and rejects any key left unread.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return fallback;
    return convert<T>(*it, key);
  }

  template <typename T>
  T require(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) throw ConfigError(child(key) + ": missing required key");
    return convert<T>(*it, key);
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, _] : obj_.items())
      if (!seen_.count(key)) throw ConfigError(child(key) + ": unknown key");
  }

 private:
  template <typename T>
  T convert(const json& v, const std::string& key) const {
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError("expected a number");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer()) throw ConfigError("expected an integer");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("expected true or false");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("expected a string");
      }
      return v.get<T>();
    } catch (const ConfigError& e) {
      throw ConfigError(child(key) + ": " + e.what());
    } catch (const json::exception& e) {
      throw ConfigError(child(key) + ": " + e.what());
    }
  }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

// Runs `fn`, re-throwing validation failures as ConfigError under `path`.
template <typename Fn>
auto at_path(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

Arm parse_arm(const json& obj, const std::string& path, std::size_t index) {
  ObjectReader r(obj, path);
  Arm arm;
  arm.name = r.get<std::string>("name", index == 0 ? "baseline" : "arm" + std::to_string(index));
  if (arm.name.empty() || arm.name.find_first_of(",\"\n/ ") != std::string::npos)
    throw ConfigError(r.child("name") + ": must be non-empty without commas, quotes, slashes or spaces");
  auto& p = arm.pipeline;
  p.batch_size = r.get<std::int64_t>("batch_size", 32);
  p.shuffle_buffer_size = r.get<std::int64_t>("shuffle_buffer_size", 256);
  p.echo_insertion = at_path(r.child("echo_insertion"), [&] {
    return parse_echo_insertion(r.get<std::string>("echo_insertion", "none"));
  });
  p.echo_factor = at_path(r.child("echo_factor"), [&] { return EchoFactor(r.get<double>("echo_factor", 1.0)); });
  p.augment_noise_scale = r.get<double>("augment_noise_scale", 0.0);
  r.finish();
  return arm;
}

}  // namespace

void ExperimentConfig::validate() const {
  at_path("task", [&] { task.validate(); });
  at_path("task.model", [&] { model.validate(); });
  if (budget_fresh < 1) throw ConfigError("task.budget_fresh: must be >= 1");
  if (eval_every < 1) throw ConfigError("task.eval_every: must be >= 1");
  if ((model.kind == ModelKind::linear_regression) != (task.kind == TaskKind::linear_regression))
    throw ConfigError("task.model.kind: does not fit task kind");
  if ((target.metric == Metric::mse) != (model.kind == ModelKind::linear_regression))
    throw ConfigError("task.target.metric: does not fit model kind");
  if (arms.empty()) throw ConfigError("pipeline: at least one arm is required");
  std::set<std::string> names;
  for (std::size_t i = 0; i < arms.size(); ++i) {
    if (!names.insert(arms[i].name).second) throw ConfigError("pipeline[" + std::to_string(i) + "].name: duplicate");
    at_path("pipeline[" + std::to_string(i) + "]", [&] { arms[i].pipeline.validate(); });
  }
  at_path("optimizer", [&] { optimizer.validate(); });
  at_path("search", [&] { search.validate(); });
  const auto& names_ok = tunable_hyperparameters();
  std::set<std::string> dim_names;
  for (std::size_t i = 0; i < search.dims.size(); ++i) {
    const auto& n = search.dims[i].name;
    if (std::find(names_ok.begin(), names_ok.end(), n) == names_ok.end())
      throw ConfigError("search.dims[" + std::to_string(i) + "].name: unknown hyperparameter '" + n + "'");
    if (!dim_names.insert(n).second)
      throw ConfigError("search.dims[" + std::to_string(i) + "].name: duplicate '" + n + "'");
  }
  at_path("timing", [&] { timing.validate(); });
}

ExperimentConfig parse_config(const json& doc) {
  ObjectReader top(doc, "");
  ExperimentConfig cfg;

  {
    const json* t = top.find("task");
    if (!t) throw ConfigError("task: missing required key");
    ObjectReader r(*t, "task");
    auto& task = cfg.task;
    task.kind = at_path("task.kind", [&] { return parse_task_kind(r.get<std::string>("kind", "gaussian_classes")); });
    task.train_size = r.get<std::int64_t>("train_size", task.train_size);
    task.eval_size = r.get<std::int64_t>("eval_size", task.eval_size);
    task.feature_dim = r.get<std::int64_t>("feature_dim", task.feature_dim);
    task.n_classes = r.get<std::int64_t>("n_classes", task.n_classes);
    task.separation = r.get<double>("separation", task.separation);
    task.noise = r.get<double>("noise", task.noise);
    task.condition = r.get<double>("condition", task.condition);
    task.seed = r.get<std::uint64_t>("seed", task.seed);
    cfg.budget_fresh = r.require<std::int64_t>("budget_fresh");
    cfg.eval_every = r.get<std::int64_t>("eval_every", cfg.eval_every);

    cfg.model.feature_dim = static_cast<std::size_t>(std::max<std::int64_t>(1, task.feature_dim));
    cfg.model.n_classes = static_cast<std::size_t>(std::max<std::int64_t>(1, task.n_classes));
    cfg.model.kind = task.kind == TaskKind::linear_regression ? ModelKind::linear_regression
                                                               : ModelKind::softmax_classifier;
    if (const json* m = r.find("model")) {
      ObjectReader mr(*m, "task.model");
      cfg.model.kind = at_path("task.model.kind", [&] {
        return parse_model_kind(mr.get<std::string>("kind", std::string(to_string(cfg.model.kind))));
      });
      cfg.model.hidden = mr.get<std::size_t>("hidden", cfg.model.hidden);
      cfg.model.init_scale = mr.get<double>("init_scale", cfg.model.init_scale);
      mr.finish();
    }
    const json* tg = r.find("target");
    if (!tg) throw ConfigError("task.target: missing required key");
    ObjectReader tr(*tg, "task.target");
    cfg.target.metric = at_path("task.target.metric", [&] { return parse_metric(tr.require<std::string>("metric")); });
    cfg.target.value = tr.require<double>("value");
    tr.finish();
    r.finish();
  }

  if (const json* p = top.find("pipeline")) {
    if (p->is_array()) {
      for (std::size_t i = 0; i < p->size(); ++i)
        cfg.arms.push_back(parse_arm((*p)[i], "pipeline[" + std::to_string(i) + "]", i));
    } else {
      cfg.arms.push_back(parse_arm(*p, "pipeline", 0));
    }
  } else {
    throw ConfigError("pipeline: missing required key");
  }
  for (auto& arm : cfg.arms) {
    arm.pipeline.dataset_size = cfg.task.train_size;
    arm.pipeline.feature_dim = cfg.task.feature_dim;
  }

  if (const json* o = top.find("optimizer")) {
    ObjectReader r(*o, "optimizer");
    cfg.optimizer.rule =
        at_path("optimizer.rule", [&] { return parse_momentum_rule(r.get<std::string>("rule", "nesterov")); });
    cfg.optimizer.momentum = r.get<double>("momentum", cfg.optimizer.momentum);
    cfg.optimizer.base_lr = r.get<double>("learning_rate", cfg.optimizer.base_lr);
    r.finish();
  }

  if (const json* s = top.find("schedule")) {
    ObjectReader r(*s, "schedule");
    auto& sc = cfg.optimizer.schedule;
    sc.kind = at_path("schedule.kind", [&] { return parse_schedule_kind(r.get<std::string>("kind", "constant")); });
    sc.decay_steps = r.get<std::int64_t>("decay_steps", sc.decay_steps);
    sc.final_factor = r.get<double>("final_factor", sc.final_factor);
    sc.warmup_epochs = r.get<double>("warmup_epochs", sc.warmup_epochs);
    sc.decay_epochs = r.get<std::vector<double>>("decay_epochs", sc.decay_epochs);
    sc.decay_factor = r.get<double>("decay_factor", sc.decay_factor);
    r.finish();
  }

  {
    const json* s = top.find("search");
    if (!s) throw ConfigError("search: missing required key");
    ObjectReader r(*s, "search");
    cfg.search.n_trials = r.require<std::int64_t>("n_trials");
    cfg.search.n_searches = r.get<std::int64_t>("n_searches", cfg.search.n_searches);
    if (const json* dims = r.find("dims")) {
      if (!dims->is_array()) throw ConfigError("search.dims: expected an array");
      for (std::size_t i = 0; i < dims->size(); ++i) {
        const auto path = "search.dims[" + std::to_string(i) + "]";
        ObjectReader dr((*dims)[i], path);
        SearchDim d;
        d.name = dr.require<std::string>("name");
        d.kind = at_path(path + ".kind", [&] { return parse_dim_kind(dr.require<std::string>("kind")); });
        d.low = dr.require<double>("low");
        d.high = dr.require<double>("high");
        dr.finish();
        cfg.search.dims.push_back(std::move(d));
      }
    }
    r.finish();
  }

  if (const json* t = top.find("timing")) {
    ObjectReader r(*t, "timing");
    cfg.timing.t_upstream = r.get<double>("t_upstream", cfg.timing.t_upstream);
    cfg.timing.t_downstream = r.get<double>("t_downstream", cfg.timing.t_downstream);
    cfg.timing.echo_overhead = r.get<double>("echo_overhead", cfg.timing.echo_overhead);
    cfg.timing.jitter_scale = r.get<double>("jitter_scale", cfg.timing.jitter_scale);
    r.finish();
  }

  cfg.output_dir = top.get<std::string>("output_dir", cfg.output_dir);
  cfg.master_seed = top.get<std::uint64_t>("master_seed", cfg.master_seed);
  top.finish();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

}  // namespace dataecho
