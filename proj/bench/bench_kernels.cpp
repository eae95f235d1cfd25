// Serial reference vs OpenMP kernels.
//   ./dataecho_bench --benchmark_filter=Grad

#include <benchmark/benchmark.h>

#include <vector>

#include "dataecho/model.hpp"
#include "dataecho/stats.hpp"
#include "dataecho/trainer.hpp"

using namespace dataecho;

namespace {

Execution exec_of(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::serial : Execution::parallel;
}

std::vector<ExampleRecord> make_batch(const ModelSpec& spec, std::size_t n) {
  Rng rng(1);
  std::vector<ExampleRecord> batch(n);
  for (auto& ex : batch) {
    ex.features.resize(spec.feature_dim);
    for (auto& x : ex.features) x = standard_normal(rng);
    ex.label = double(rng() % spec.n_classes);
  }
  return batch;
}

void BM_Grad(benchmark::State& state) {
  const ModelSpec spec{ModelKind::small_mlp, 64, 10, 64, 0.1};
  const auto model = init_model(spec, 3);
  const auto batch = make_batch(spec, static_cast<std::size_t>(state.range(1)));
  const auto exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_grad(model, batch, exec));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_Grad)->ArgNames({"parallel", "batch"})->ArgsProduct({{0, 1}, {32, 256, 2048}});

void BM_Evaluate(benchmark::State& state) {
  TaskSpec task;
  task.train_size = 16;
  task.eval_size = state.range(1);
  task.feature_dim = 32;
  task.n_classes = 4;
  const auto data = make_task(task);
  const auto model = init_model({ModelKind::softmax_classifier, 32, 4, 16, 0.1}, 5);
  const auto exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(model, *data.eval, Metric::cross_entropy, exec));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_Evaluate)->ArgNames({"parallel", "rows"})->ArgsProduct({{0, 1}, {1024, 16384}});

void BM_Duplication(benchmark::State& state) {
  PipelineConfig c;
  c.dataset_size = 256;
  c.batch_size = 16;
  c.shuffle_buffer_size = 32;
  c.echo_insertion = EchoInsertion::example_before_augment;
  c.echo_factor = EchoFactor(2.0);
  const auto exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(measure_duplication(c, state.range(1), 9, exec));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_Duplication)->ArgNames({"parallel", "batches"})->ArgsProduct({{0, 1}, {4096, 65536}});

}  // namespace

BENCHMARK_MAIN();
