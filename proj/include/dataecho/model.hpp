#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "dataecho/parallel.hpp"
#include "dataecho/pipeline.hpp"

namespace dataecho {

enum class ModelKind { linear_regression, softmax_classifier, small_mlp };

std::string_view to_string(ModelKind kind) noexcept;
ModelKind parse_model_kind(std::string_view name);

struct ModelSpec {
  ModelKind kind = ModelKind::softmax_classifier;
  std::size_t feature_dim = 1;
  std::size_t n_classes = 2;  // ignored by linear_regression
  std::size_t hidden = 16;    // small_mlp only
  double init_scale = 0.1;    // weights start uniform in [-init_scale, init_scale]

  void validate() const;
};

/// Parameter vector layouts (row-major, bias last in each row):
///   linear_regression   w[d], b
///   softmax_classifier  C rows of (w[d], b)
///   small_mlp           H rows of (w[d], b), then C rows of (w[H], b); tanh hidden
std::size_t param_count(const ModelSpec& spec);

struct ModelState {
  ModelSpec spec;
  std::vector<double> params;
};

ModelState init_model(const ModelSpec& spec, std::uint64_t seed);

/// Mean loss over a batch and its gradient. Squared error (1/2 (y - f)^2)
/// for regression, cross entropy for the classifiers.
struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

/// The parallel path accumulates fixed-size chunks and reduces them in
/// order, so its result does not depend on the thread count.
LossGrad loss_and_grad(const ModelState& model, std::span<const ExampleRecord> batch,
                       Execution exec = Execution::parallel);

double batch_loss(const ModelState& model, std::span<const ExampleRecord> batch);

/// Raised by grad() when the loss is not finite.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mean gradient over the batch; throws DivergenceError on a non-finite loss.
std::vector<double> grad(const ModelState& model, const BatchRecord& batch, Execution exec = Execution::parallel);

enum class Metric { accuracy, cross_entropy, mse };

std::string_view to_string(Metric metric) noexcept;
Metric parse_metric(std::string_view name);
constexpr bool higher_is_better(Metric m) noexcept { return m == Metric::accuracy; }

/// Held-out metric over a whole dataset.
double evaluate(const ModelState& model, const Dataset& data, Metric metric, Execution exec = Execution::parallel);

}  // namespace dataecho
