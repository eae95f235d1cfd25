#include <cmath>
#include <limits>
#include <vector>

#include "dataecho/model.hpp"
#include "doctest.h"

using namespace dataecho;

namespace {

std::vector<ExampleRecord> random_batch(const ModelSpec& spec, std::size_t n, Rng& rng) {
  std::vector<ExampleRecord> batch(n);
  for (auto& ex : batch) {
    ex.features.resize(spec.feature_dim);
    for (auto& x : ex.features) x = standard_normal(rng);
    ex.label = spec.kind == ModelKind::linear_regression
                   ? standard_normal(rng)
                   : double(rng() % spec.n_classes);
  }
  return batch;
}

// Central finite differences of batch_loss, step h.
std::vector<double> numeric_grad(ModelState m, const std::vector<ExampleRecord>& batch, double h) {
  std::vector<double> g(m.params.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double saved = m.params[i];
    m.params[i] = saved + h;
    const double up = batch_loss(m, batch);
    m.params[i] = saved - h;
    const double down = batch_loss(m, batch);
    m.params[i] = saved;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    scale += a[i] * a[i] + b[i] * b[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(scale), 1e-12);
}

}  // namespace

TEST_CASE("parameter counts") {
  CHECK(param_count({ModelKind::linear_regression, 4}) == 5);
  CHECK(param_count({ModelKind::softmax_classifier, 4, 3}) == 15);
  CHECK(param_count({ModelKind::small_mlp, 4, 3, 8}) == 8 * 5 + 3 * 9);
  CHECK_THROWS_AS(ModelSpec({ModelKind::softmax_classifier, 4, 1}).validate(), std::invalid_argument);
}

TEST_CASE("zero linear model on zero data has zero gradient") {
  ModelState m{{ModelKind::linear_regression, 3}, std::vector<double>(4, 0.0)};
  BatchRecord b;
  b.examples.resize(5);
  for (auto& ex : b.examples) ex.features.assign(3, 0.0);
  for (double g : grad(m, b)) CHECK(g == 0.0);
}

TEST_CASE("softmax at uniform logits") {
  const std::size_t C = 4, d = 3;
  ModelState m{{ModelKind::softmax_classifier, d, C}, std::vector<double>(C * (d + 1), 0.0)};
  Rng rng(12);
  BatchRecord b;
  b.examples = random_batch(m.spec, 6, rng);
  const auto g = grad(m, b);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t j = 0; j <= d; ++j) {
      double expected = 0.0;
      for (const auto& ex : b.examples) {
        const double x = j < d ? ex.features[j] : 1.0;
        expected += (1.0 / C - (static_cast<std::size_t>(ex.label) == c ? 1.0 : 0.0)) * x;
      }
      expected /= double(b.examples.size());
      CHECK(g[c * (d + 1) + j] == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  Rng rng(13);
  for (auto kind : {ModelKind::linear_regression, ModelKind::softmax_classifier, ModelKind::small_mlp}) {
    CAPTURE(to_string(kind));
    for (int trial = 0; trial < 20; ++trial) {
      ModelSpec spec{kind, 1 + rng() % 6, 2 + rng() % 3, 1 + rng() % 6, 0.5};
      auto m = init_model(spec, rng());
      const auto batch = random_batch(spec, 1 + rng() % 8, rng);
      const auto analytic = loss_and_grad(m, batch).grad;
      CHECK(relative_error(analytic, numeric_grad(m, batch, 1e-6)) < 1e-5);
    }
  }
}

TEST_CASE("parallel and serial gradient kernels agree") {
  Rng rng(14);
  ModelSpec spec{ModelKind::small_mlp, 16, 3, 32, 0.3};
  auto m = init_model(spec, 1);
  const auto batch = random_batch(spec, 300, rng);
  const auto par = loss_and_grad(m, batch, Execution::parallel);
  const auto ser = loss_and_grad(m, batch, Execution::serial);
  CHECK(par.loss == doctest::Approx(ser.loss).epsilon(1e-12));
  CHECK(relative_error(par.grad, ser.grad) < 1e-12);
  // The chunked reduction is deterministic.
  CHECK(loss_and_grad(m, batch, Execution::parallel).grad == par.grad);
}

TEST_CASE("non-finite loss raises DivergenceError") {
  ModelState m{{ModelKind::linear_regression, 1}, {std::numeric_limits<double>::infinity(), 0.0}};
  BatchRecord b;
  b.examples.resize(1);
  b.examples[0].features = {1.0};
  CHECK_THROWS_AS(grad(m, b), DivergenceError);
}

TEST_CASE("evaluation metrics") {
  Dataset d;
  d.feature_dim = 1;
  d.features = {-1.0, 2.0, 3.0, -4.0};
  d.labels = {0, 1, 1, 1};
  // Logit for class 1 is x, class 0 is 0: predicts sign of x.
  ModelState m{{ModelKind::softmax_classifier, 1, 2}, {0.0, 0.0, 1.0, 0.0}};
  CHECK(evaluate(m, d, Metric::accuracy) == doctest::Approx(0.75));
  const double ce = (std::log(1 + std::exp(-1.0)) + std::log(1 + std::exp(-2.0)) + std::log(1 + std::exp(-3.0)) +
                     std::log(1 + std::exp(4.0))) / 4.0;
  CHECK(evaluate(m, d, Metric::cross_entropy) == doctest::Approx(ce).epsilon(1e-12));
  CHECK_THROWS_AS(evaluate(m, d, Metric::mse), std::invalid_argument);

  ModelState lin{{ModelKind::linear_regression, 1}, {2.0, 0.0}};
  Dataset r = d;
  r.labels = {-2.0, 4.0, 7.0, -8.0};
  CHECK(evaluate(lin, r, Metric::mse) == doctest::Approx(0.25));
}

TEST_CASE("initialization is deterministic and bounded") {
  ModelSpec spec{ModelKind::small_mlp, 4, 2, 5, 0.1};
  auto a = init_model(spec, 3), b = init_model(spec, 3), c = init_model(spec, 4);
  CHECK(a.params == b.params);
  CHECK(a.params != c.params);
  for (double p : a.params) CHECK(std::abs(p) <= 0.1);
}
