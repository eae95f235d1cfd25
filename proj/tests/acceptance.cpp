// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "dataecho/echo.hpp"
#include "dataecho/experiment.hpp"
#include "dataecho/model.hpp"
#include "dataecho/optimizer.hpp"
#include "dataecho/shuffle_buffer.hpp"
#include "dataecho/stats.hpp"
#include "dataecho/timing.hpp"

using namespace dataecho;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail = what;
      pass = false;
    }
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const fs::path kWork = DATAECHO_WORK_DIR;
const fs::path kStockConfig = fs::path(DATAECHO_SOURCE_DIR) / "configs" / "stock_echo.json";

RunOptions deterministic_quiet() {
  RunOptions o;
  o.deterministic = true;
  o.quiet = true;
  return o;
}

ExperimentConfig stock_config(const std::string& out) {
  auto cfg = load_config(kStockConfig);
  cfg.output_dir = (kWork / out).string();
  return cfg;
}

const ArmSummary* find_arm(const ExperimentSummary& s, const std::string& name) {
  for (const auto& a : s.arms)
    if (a.name == name) return &a;
  return nullptr;
}

// ---- 1 ----
Outcome cycle_time_grid() {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  int flat_checked = 0;
  for (int i = 0; i < 1000; ++i) {
    TimingModel m;
    // R spans both regimes, so roughly half the triples have e <= R.
    m.t_downstream = 0.01 + 10.0 * unit_double(rng());
    m.t_upstream = m.t_downstream * (0.25 + 15.75 * unit_double(rng()));
    const double e = 1.0 + 15.0 * unit_double(rng());
    const double expected = std::max(m.t_upstream, e * m.t_downstream);
    worst = std::max(worst, std::abs(cycle_time(m, e) - expected) / expected);
    if (e <= m.ratio()) {
      ++flat_checked;
      o.require(std::abs(cycle_time(m, e) - m.t_upstream) <= 1e-12 * m.t_upstream, "cycle not constant for e <= R");
      o.require(std::abs(cycle_time(m, e) - cycle_time(m, 1.0)) <= 1e-12 * m.t_upstream,
                "cycle differs from e = 1 for e <= R");
    }
  }
  const double secs = seconds_since(t0);
  o.require(worst <= 1e-12, fmt("max relative error %.3g", worst));
  o.require(flat_checked > 100, "too few triples with e <= R");
  o.require(secs < 1.0, fmt("took %.3f s", secs));
  if (o.pass)
    o.detail = fmt("1000 triples, max rel err %.3g, %g with e<=R constant, %.3f s", worst, flat_checked, secs);
  return o;
}

// ---- 2 ----
Outcome idle_fraction_scenario() {
  Outcome o;
  TimingModel m;
  m.t_upstream = 2.0;
  m.t_downstream = 1.0;
  const double idle1 = downstream_idle_fraction(m, 1.0);
  const double idle2 = downstream_idle_fraction(m, 2.0);
  o.require(idle1 == 0.5, fmt("idle(e=1) = %.17g", idle1));
  o.require(idle2 == 0.0, fmt("idle(e=2) = %.17g", idle2));
  if (o.pass) o.detail = fmt("t_up = 2 t_down: idle(e=1) = %g, idle(e=2) = %g", idle1, idle2);
  return o;
}

// ---- 3 ----
Outcome echo_semantics() {
  Outcome o;
  const auto t0 = Clock::now();
  struct Item {
    std::int64_t id = 0;
    std::int64_t echo_index = -1;
  };
  std::vector<Item> items(1000);
  for (std::size_t i = 0; i < items.size(); ++i) items[i].id = static_cast<std::int64_t>(i);

  for (int e : {1, 2, 3, 5}) {
    Rng rng(derive_seed(3, {static_cast<std::uint64_t>(e)}));
    const auto out = echo_stage(items, EchoFactor(e), rng);
    o.require(out.size() == items.size() * static_cast<std::size_t>(e), "integer echo emitted wrong count");
    for (std::size_t k = 0; k < out.size(); ++k) {
      const auto src = static_cast<std::int64_t>(k / static_cast<std::size_t>(e));
      const auto idx = static_cast<std::int64_t>(k % static_cast<std::size_t>(e));
      if (out[k].id != src || out[k].echo_index != idx) {
        o.require(false, "integer echo broke adjacency or echo_index");
        break;
      }
    }
    // Same check through the streaming stage.
    Echoer<Item> echoer(EchoFactor(e), 9);
    std::size_t emitted = 0;
    for (const auto& it : items) {
      echoer.push(it);
      std::int64_t k = 0;
      while (echoer.has_pending()) {
        const auto x = echoer.pop();
        o.require(x.id == it.id && x.echo_index == k++, "Echoer broke adjacency");
        ++emitted;
      }
    }
    o.require(emitted == items.size() * static_cast<std::size_t>(e), "Echoer emitted wrong count");
  }

  const std::int64_t n = 100'000;
  std::vector<Item> many(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) many[static_cast<std::size_t>(i)].id = i;
  std::string worst;
  for (double e : {1.25, 1.5, 2.5}) {
    Rng rng(derive_seed(4, {static_cast<std::uint64_t>(e * 100)}));
    const auto out = echo_stage(many, EchoFactor(e), rng);
    const double mean = double(out.size()) / double(n);
    const double f = e - std::floor(e);
    const double se = std::sqrt(f * (1 - f) / double(n));
    const double z = (mean - e) / se;
    o.require(std::abs(z) <= 3.0, fmt("e=%g mean repeats %.5f (z=%.2f)", e, mean, z));
    worst += fmt("e=%g:%.4f ", e, mean);
    // Each item repeats floor(e) or floor(e)+1 times, copies adjacent.
    std::size_t k = 0;
    while (k < out.size()) {
      std::size_t r = 0;
      while (k + r < out.size() && out[k + r].id == out[k].id) {
        if (out[k + r].echo_index != static_cast<std::int64_t>(r)) o.require(false, "fractional echo_index wrong");
        ++r;
      }
      if (r != static_cast<std::size_t>(std::floor(e)) && r != static_cast<std::size_t>(std::floor(e)) + 1) {
        o.require(false, "fractional repeat count out of range");
        break;
      }
      k += r;
    }
  }
  const double secs = seconds_since(t0);
  o.require(secs < 5.0, fmt("took %.3f s", secs));
  if (o.pass) o.detail = "integer e exact; mean repeats " + worst + fmt("(within 3 SE), %.3f s", secs);
  return o;
}

// ---- 4 ----
double permutation_chi2_pvalue(int n_items, int trials, std::uint64_t seed0) {
  std::vector<int> in(static_cast<std::size_t>(n_items));
  std::iota(in.begin(), in.end(), 0);
  std::map<std::vector<int>, int> counts;
  for (int t = 0; t < trials; ++t)
    ++counts[shuffle_sequence(in, static_cast<std::size_t>(n_items), seed0 + static_cast<std::uint64_t>(t))];
  int cells = 1;
  for (int k = 2; k <= n_items; ++k) cells *= k;
  if (static_cast<int>(counts.size()) != cells) return 0.0;
  const double expected = double(trials) / cells;
  double chi2 = 0.0;
  for (const auto& [perm, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
  const boost::math::chi_squared dist(cells - 1);
  return boost::math::cdf(boost::math::complement(dist, chi2));
}

Outcome shuffle_buffer_checks() {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(404);
  for (int c = 0; c < 10'000; ++c) {
    const auto n = uniform_index(rng, 200);
    const auto cap = 1 + uniform_index(rng, 64);
    const auto distinct = 1 + uniform_index(rng, 50);
    std::vector<int> in(n);
    for (auto& x : in) x = static_cast<int>(uniform_index(rng, distinct));
    auto out = shuffle_sequence(in, cap, rng());
    std::sort(in.begin(), in.end());
    std::sort(out.begin(), out.end());
    if (in != out) {
      o.require(false, fmt("multiset changed (n=%g, cap=%g)", double(n), double(cap)));
      break;
    }
  }
  const double p3 = permutation_chi2_pvalue(3, 60'000, 1'000'000);
  const double p4 = permutation_chi2_pvalue(4, 60'000, 2'000'000);
  o.require(p3 > 0.001, fmt("3-item chi-square p = %.3g", p3));
  o.require(p4 > 0.001, fmt("4-item chi-square p = %.3g", p4));
  const double secs = seconds_since(t0);
  o.require(secs < 30.0, fmt("took %.2f s", secs));
  if (o.pass) o.detail = fmt("10^4 configs conserved; chi-square p(3)=%.3f p(4)=%.3f; %.2f s", p3, p4, secs);
  return o;
}

// ---- 5 ----
PipelineConfig tiny_pipeline(int n, int buffer, int batch, int e) {
  PipelineConfig c;
  c.dataset_size = n;
  c.shuffle_buffer_size = buffer;
  c.batch_size = batch;
  c.echo_insertion = e == 1 ? EchoInsertion::none : EchoInsertion::example_before_augment;
  c.echo_factor = EchoFactor(e);
  return c;
}

Outcome oracle_agreement() {
  Outcome o;
  const auto t0 = Clock::now();
  const int configs[][4] = {{3, 2, 2, 2}, {3, 1, 2, 2}, {3, 3, 2, 1}, {4, 2, 2, 2}, {4, 3, 3, 2}, {3, 2, 4, 3},
                            {5, 2, 2, 2}, {2, 2, 2, 3}, {3, 4, 3, 3}, {4, 4, 4, 2}, {6, 3, 2, 2}, {6, 4, 4, 3},
                            {5, 3, 3, 3}, {6, 2, 3, 2}};
  int checked = 0;
  double worst_z = 0.0;
  for (const auto& c : configs) {
    const auto exact = duplication_oracle(c[0], c[1], c[2], c[3]).as_report();
    const auto mc = measure_duplication(tiny_pipeline(c[0], c[1], c[2], c[3]), 200'000,
                                        derive_seed(55, {std::uint64_t(c[0]), std::uint64_t(c[1]),
                                                         std::uint64_t(c[2]), std::uint64_t(c[3])}));
    const std::pair<double, double> pairs[][2] = {
        {{mc.within_batch_dup_fraction, mc.within_batch_dup_stderr}, {exact.within_batch_dup_fraction, 0}},
        {{mc.adjacent_batch_identity_rate, mc.adjacent_batch_identity_stderr}, {exact.adjacent_batch_identity_rate, 0}},
        {{mc.distinct_reads_per_batch_mean, mc.distinct_reads_stderr}, {exact.distinct_reads_per_batch_mean, 0}}};
    for (const auto& pr : pairs) {
      const double diff = std::abs(pr[0].first - pr[1].first);
      const double se = pr[0].second;
      // A zero standard error only arises when every replicate agrees, so the
      // estimate must then equal the exact value.
      const bool ok = se > 0 ? diff <= 3 * se : diff <= 1e-12;
      if (se > 0) worst_z = std::max(worst_z, diff / se);
      o.require(ok, fmt("config (%g,%g,%g,...) off by %.3g", c[0], c[1], c[2], diff));
    }
    ++checked;
  }
  const double secs = seconds_since(t0);
  o.require(checked >= 10, "fewer than 10 configs");
  o.require(secs < 60.0, fmt("took %.2f s", secs));
  if (o.pass) o.detail = fmt("%g configs x 3 rates, worst |z| = %.2f, %.2f s", checked, worst_z, secs);
  return o;
}

// ---- 6 ----
Outcome duplication_monotonicity() {
  Outcome o;
  const std::int64_t buffers[] = {1, 4, 16, 64};
  const std::int64_t batches[] = {2, 4, 8, 16};
  double grid[4][4];
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      PipelineConfig c;
      c.dataset_size = 64;
      c.shuffle_buffer_size = buffers[i];
      c.batch_size = batches[j];
      c.echo_insertion = EchoInsertion::example_before_augment;
      c.echo_factor = EchoFactor(2.0);
      grid[i][j] = measure_duplication(c, 40'000, 777).within_batch_dup_fraction;  // paired seed
      c.echo_factor = EchoFactor(1.0);
      const auto none = measure_duplication(c, 2'000, 777);
      o.require(none.within_batch_dup_fraction == 0.0, "duplicates with e = 1");
      c.echo_insertion = EchoInsertion::none;
      o.require(measure_duplication(c, 2'000, 777).within_batch_dup_fraction == 0.0, "duplicates without echo");
    }
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      if (i > 0) o.require(grid[i][j] <= grid[i - 1][j], fmt("not nonincreasing in buffer at (%g,%g)", i, j));
      if (j > 0) o.require(grid[i][j] >= grid[i][j - 1], fmt("not nondecreasing in batch at (%g,%g)", i, j));
    }
  if (o.pass)
    o.detail = fmt("buffers 1..64 x batches 2..16; corners %.3f (b1,B2) %.3f (b64,B2) %.3f (b64,B16)", grid[0][0],
                   grid[3][0], grid[3][3]);
  return o;
}

// ---- 7 ----
double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    scale += a[i] * a[i] + b[i] * b[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(scale), 1e-12);
}

Outcome gradient_and_optimizer() {
  Outcome o;
  Rng rng(707);
  double worst = 0.0;
  for (auto kind : {ModelKind::linear_regression, ModelKind::softmax_classifier, ModelKind::small_mlp}) {
    for (int inst = 0; inst < 100; ++inst) {
      ModelSpec spec{kind, 1 + rng() % 8, 2 + rng() % 4, 1 + rng() % 8, 0.5};
      auto m = init_model(spec, rng());
      std::vector<ExampleRecord> batch(1 + rng() % 16);
      for (auto& ex : batch) {
        ex.features.resize(spec.feature_dim);
        for (auto& x : ex.features) x = standard_normal(rng);
        ex.label = kind == ModelKind::linear_regression ? standard_normal(rng) : double(rng() % spec.n_classes);
      }
      const auto analytic = loss_and_grad(m, batch).grad;
      std::vector<double> numeric(analytic.size());
      const double h = 1e-6;
      for (std::size_t i = 0; i < numeric.size(); ++i) {
        const double saved = m.params[i];
        m.params[i] = saved + h;
        const double up = batch_loss(m, batch);
        m.params[i] = saved - h;
        const double down = batch_loss(m, batch);
        m.params[i] = saved;
        numeric[i] = (up - down) / (2 * h);
      }
      worst = std::max(worst, relative_error(analytic, numeric));
      o.require(loss_and_grad(m, batch, Execution::serial).grad == analytic, "serial and parallel kernels differ");
    }
  }
  o.require(worst < 1e-5, fmt("finite-difference rel err %.3g", worst));

  double worst_opt = 0.0;
  for (auto rule : {MomentumRule::sgd_momentum, MomentumRule::nesterov})
    for (double mu : {0.0, 0.5, 0.9, 0.99}) {
      const double a = 1.5, lr = 0.05;
      double theta_ref = 2.0, v = 0.0;
      std::vector<double> theta{2.0};
      OptimizerState opt({rule, mu, lr, {}}, 1);
      for (int s = 0; s < 100; ++s) {
        const double g = a * theta_ref;
        const double v_next = mu * v - lr * g;
        theta_ref = rule == MomentumRule::sgd_momentum ? theta_ref + v_next : theta_ref + mu * v_next - lr * g;
        v = v_next;
        const std::vector<double> gv{a * theta[0]};
        optimizer_step(theta, opt, gv, s, 1);
        worst_opt = std::max(worst_opt, std::abs(theta[0] - theta_ref));
      }
    }
  o.require(worst_opt <= 1e-12, fmt("optimizer deviates by %.3g", worst_opt));
  if (o.pass) o.detail = fmt("300 instances, max FD rel err %.3g; optimizer max dev %.3g", worst, worst_opt);
  return o;
}

// ---- 8, 10, 11 share the stock run ----
struct StockRun {
  ExperimentResult result;
  double seconds = 0.0;
};

Outcome echo_vs_baseline(const StockRun& run, const ExperimentConfig& cfg) {
  Outcome o;
  o.require(cfg.search.n_trials >= 25 && cfg.search.n_searches >= 3, "search smaller than 25 x 3");
  const auto* base = find_arm(run.result.summary, "baseline");
  const auto* echo = find_arm(run.result.summary, "echo2");
  o.require(base && echo, "stock config lacks baseline/echo2 arms");
  if (!o.pass) return o;
  o.require(base->echo_insertion == EchoInsertion::none, "baseline arm echoes");
  o.require(echo->echo_insertion == EchoInsertion::example_before_augment && echo->echo_factor == 2.0,
            "echo arm is not example echoing before augmentation with e = 2");
  o.require(base->searches_reaching_target == cfg.search.n_searches &&
                echo->searches_reaching_target == cfg.search.n_searches,
            "some search never reached the target");
  if (!o.pass) return o;
  const double mb = base->fresh_examples->median;
  const double me = echo->fresh_examples->median;
  const double ratio = me / mb;
  o.require(me <= 0.9 * mb, fmt("echo median %g > 0.9 x baseline %g", me, mb));
  o.require(me >= 0.5 * mb * (1 - 0.1), fmt("echo median %g below ideal bound for baseline %g", me, mb));
  o.require(run.seconds < 600.0, fmt("took %.1f s", run.seconds));
  if (o.pass)
    o.detail = fmt("median fresh: baseline %g, echo %g (ratio %.3f), %.1f s", mb, me, ratio, run.seconds);
  return o;
}

Outcome echo_factor_sweep_check(const std::vector<SweepPoint>& points) {
  Outcome o;
  std::vector<double> med;
  std::string text;
  for (const auto& p : points) {
    const auto* echo = find_arm(p.summary, "echo2");
    const auto* base = find_arm(p.summary, "baseline");
    if (!echo || !echo->fresh_examples || echo->searches_reaching_target != static_cast<std::int64_t>(echo->searches.size())) {
      o.require(false, fmt("e=%g: echo arm missed the target", p.value));
      return o;
    }
    if (p.value == 1.0)
      o.require(base && base->fresh_examples && base->fresh_examples->median == echo->fresh_examples->median,
                "e = 1 differs from the baseline arm");
    med.push_back(echo->fresh_examples->median);
    text += fmt("e=%g:%g ", p.value, echo->fresh_examples->median);
  }
  o.require(med.size() == 4, "expected four sweep points");
  if (!o.pass) return o;
  o.require(med[1] <= med[0] && med[2] <= med[0], "f(2) or f(4) exceeds f(1)");
  std::size_t k = 0;
  while (k + 1 < med.size() && med[k + 1] <= med[k]) ++k;
  while (k + 1 < med.size() && med[k + 1] >= med[k]) ++k;
  o.require(k + 1 == med.size(), "median curve has more than one trough");
  if (o.pass) o.detail = "median fresh " + text + "(single trough)";
  return o;
}

Outcome walltime_proportionality(const ExperimentResult& zero_overhead, const ExperimentResult& with_overhead,
                                 const ExperimentConfig& cfg) {
  Outcome o;
  o.require(cfg.timing.ratio() == 6.0 && cfg.timing.echo_overhead == 0.0 && cfg.timing.jitter_scale == 0.0,
            "stock timing is not R = 6 without overhead");
  auto check = [&](const ExperimentResult& r, bool exact, double& speedup_out, double& ratio_out) {
    const auto* base = find_arm(r.summary, "baseline");
    for (const auto& a : r.summary.arms) {
      if (a.echo_insertion == EchoInsertion::none) continue;
      const double fresh_ratio = base->fresh_examples->mean / a.fresh_examples->mean;
      const double speedup = base->simulated_walltime->mean / a.simulated_walltime->mean;
      speedup_out = speedup;
      ratio_out = fresh_ratio;
      if (exact)
        o.require(std::abs(speedup - fresh_ratio) <= 1e-9 * fresh_ratio,
                  fmt("speedup %.12g vs fresh ratio %.12g", speedup, fresh_ratio));
      else
        o.require(speedup < fresh_ratio, fmt("overhead speedup %.6g not below ratio %.6g", speedup, fresh_ratio));
    }
  };
  double s0 = 0, r0 = 0, s1 = 0, r1 = 0;
  check(zero_overhead, true, s0, r0);
  check(with_overhead, false, s1, r1);
  if (o.pass)
    o.detail = fmt("overhead 0: speedup %.6f = fresh ratio %.6f; overhead 0.1: %.6f < %.6f", s0, r0, s1, r1);
  return o;
}

Outcome determinism(const fs::path& a, const fs::path& b) {
  Outcome o;
  for (const char* f : {"trials.csv", "summary.json"}) {
    const auto x = slurp(a / f);
    o.require(!x.empty(), std::string(f) + " missing");
    o.require(x == slurp(b / f), std::string(f) + " differs between runs");
  }
  if (o.pass) o.detail = "trials.csv and summary.json byte-identical across two runs";
  return o;
}

void print(int n, const char* name, const Outcome& o) {
  std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str());
  std::fflush(stdout);
}

Outcome guarded(const std::function<Outcome()>& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

}  // namespace

int main() {
  fs::remove_all(kWork);
  fs::create_directories(kWork);
  int failures = 0;
  auto report_line = [&](int n, const char* name, const Outcome& o) {
    print(n, name, o);
    if (!o.pass) ++failures;
  };

  report_line(1, "cycle time exactness", guarded(cycle_time_grid));
  report_line(2, "idle fraction scenario", guarded(idle_fraction_scenario));
  report_line(3, "echo semantics", guarded(echo_semantics));
  report_line(4, "shuffle buffer", guarded(shuffle_buffer_checks));
  report_line(5, "duplication oracle agreement", guarded(oracle_agreement));
  report_line(6, "duplication monotonicity", guarded(duplication_monotonicity));
  report_line(7, "gradients and optimizer", guarded(gradient_and_optimizer));

  StockRun first, second;
  ExperimentResult overhead_run;
  std::vector<SweepPoint> sweep_points;
  const auto cfg = guarded([&] {
    (void)load_config(kStockConfig);
    return Outcome{};
  });

  const auto stock = [&]() -> Outcome {
    const auto c = stock_config("stock_a");
    const auto t0 = Clock::now();
    first.result = run_experiment(c, deterministic_quiet());
    first.seconds = seconds_since(t0);
    return echo_vs_baseline(first, c);
  };
  report_line(8, "echo vs baseline search", cfg.pass ? guarded(stock) : cfg);

  report_line(9, "echo factor sweep", guarded([&] {
                sweep_points = sweep(stock_config("sweep"), SweepAxis::echo_factor, {1, 2, 4, 8}, deterministic_quiet());
                return echo_factor_sweep_check(sweep_points);
              }));

  report_line(10, "walltime proportionality", guarded([&] {
                if (first.result.summary.arms.empty()) return Outcome{false, "stock run missing"};
                auto c = stock_config("stock_overhead");
                c.timing.echo_overhead = 0.1;
                overhead_run = run_experiment(c, deterministic_quiet());
                return walltime_proportionality(first.result, overhead_run, stock_config("stock_a"));
              }));

  report_line(11, "harness determinism", guarded([&] {
                second.result = run_experiment(stock_config("stock_b"), deterministic_quiet());
                return determinism(kWork / "stock_a", kWork / "stock_b");
              }));

  std::printf("%d of 11 criteria passed\n", 11 - failures);
  return failures == 0 ? 0 : 1;
}
