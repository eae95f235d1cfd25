#include "dataecho/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dataecho/random.hpp"

namespace dataecho {

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::linear_regression: return "linear_regression";
    case ModelKind::softmax_classifier: return "softmax_classifier";
    case ModelKind::small_mlp: return "small_mlp";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  for (auto k : {ModelKind::linear_regression, ModelKind::softmax_classifier, ModelKind::small_mlp})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown model kind '" + std::string(name) + "'");
}

std::string_view to_string(Metric metric) noexcept {
  switch (metric) {
    case Metric::accuracy: return "accuracy";
    case Metric::cross_entropy: return "cross_entropy";
    case Metric::mse: return "mse";
  }
  return "?";
}

Metric parse_metric(std::string_view name) {
  for (auto m : {Metric::accuracy, Metric::cross_entropy, Metric::mse})
    if (to_string(m) == name) return m;
  throw std::invalid_argument("unknown metric '" + std::string(name) + "'");
}

void ModelSpec::validate() const {
  if (feature_dim < 1) throw std::invalid_argument("model: feature_dim must be >= 1");
  if (kind != ModelKind::linear_regression && n_classes < 2)
    throw std::invalid_argument("model: classifiers need n_classes >= 2");
  if (kind == ModelKind::small_mlp && hidden < 1) throw std::invalid_argument("model: hidden must be >= 1");
  if (!(init_scale >= 0.0)) throw std::invalid_argument("model: init_scale must be >= 0");
}

std::size_t param_count(const ModelSpec& spec) {
  const auto d = spec.feature_dim;
  switch (spec.kind) {
    case ModelKind::linear_regression: return d + 1;
    case ModelKind::softmax_classifier: return spec.n_classes * (d + 1);
    case ModelKind::small_mlp: return spec.hidden * (d + 1) + spec.n_classes * (spec.hidden + 1);
  }
  return 0;
}

ModelState init_model(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  ModelState m{spec, std::vector<double>(param_count(spec))};
  Rng rng(derive_seed(seed, {seed_role::kInit}));
  for (auto& p : m.params) p = spec.init_scale * (2.0 * unit_double(rng()) - 1.0);
  return m;
}

namespace {

// Scratch space for one forward/backward pass.
struct Workspace {
  std::vector<double> hidden;
  std::vector<double> logits;
  std::vector<double> delta;

  explicit Workspace(const ModelSpec& s)
      : hidden(s.kind == ModelKind::small_mlp ? s.hidden : 0),
        logits(s.kind == ModelKind::linear_regression ? 1 : s.n_classes),
        delta(hidden.size()) {}
};

// Affine rows: out[r] = w_r . x + b_r for rows laid out as (w[in], b).
void affine(std::span<const double> params, std::size_t offset, std::span<const double> x, std::span<double> out) {
  const auto in = x.size();
  for (std::size_t r = 0; r < out.size(); ++r) {
    const double* w = params.data() + offset + r * (in + 1);
    double acc = w[in];
    for (std::size_t j = 0; j < in; ++j) acc += w[j] * x[j];
    out[r] = acc;
  }
}

// In-place softmax; returns log-sum-exp of the input logits.
double softmax_inplace(std::span<double> z) {
  const double peak = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (auto& v : z) {
    v = std::exp(v - peak);
    sum += v;
  }
  for (auto& v : z) v /= sum;
  return peak + std::log(sum);
}

void forward(const ModelState& m, std::span<const double> x, Workspace& ws) {
  const auto& s = m.spec;
  switch (s.kind) {
    case ModelKind::linear_regression:
    case ModelKind::softmax_classifier:
      affine(m.params, 0, x, ws.logits);
      break;
    case ModelKind::small_mlp:
      affine(m.params, 0, x, ws.hidden);
      for (auto& h : ws.hidden) h = std::tanh(h);
      affine(m.params, s.hidden * (s.feature_dim + 1), ws.hidden, ws.logits);
      break;
  }
}

std::size_t label_class(double label, std::size_t n_classes) {
  const auto c = static_cast<std::int64_t>(label);
  if (c < 0 || static_cast<std::size_t>(c) >= n_classes) throw std::invalid_argument("label out of class range");
  return static_cast<std::size_t>(c);
}

// Per-example loss; when grad is non-empty the example gradient is added to it.
double example_loss(const ModelState& m, std::span<const double> x, double label, Workspace& ws,
                    std::span<double> grad) {
  const auto& s = m.spec;
  forward(m, x, ws);
  if (s.kind == ModelKind::linear_regression) {
    const double r = ws.logits[0] - label;
    if (!grad.empty()) {
      for (std::size_t j = 0; j < x.size(); ++j) grad[j] += r * x[j];
      grad[x.size()] += r;
    }
    return 0.5 * r * r;
  }
  const auto y = label_class(label, s.n_classes);
  const double z_y = ws.logits[y];
  const double lse = softmax_inplace(ws.logits);
  const double loss = lse - z_y;
  if (grad.empty()) return loss;
  ws.logits[y] -= 1.0;  // now dL/dlogits

  if (s.kind == ModelKind::softmax_classifier) {
    const auto d = s.feature_dim;
    for (std::size_t c = 0; c < s.n_classes; ++c) {
      double* g = grad.data() + c * (d + 1);
      const double dc = ws.logits[c];
      for (std::size_t j = 0; j < d; ++j) g[j] += dc * x[j];
      g[d] += dc;
    }
    return loss;
  }

  const auto d = s.feature_dim;
  const auto h = s.hidden;
  const auto out_offset = h * (d + 1);
  std::fill(ws.delta.begin(), ws.delta.end(), 0.0);
  for (std::size_t c = 0; c < s.n_classes; ++c) {
    const double dc = ws.logits[c];
    const double* w = m.params.data() + out_offset + c * (h + 1);
    double* g = grad.data() + out_offset + c * (h + 1);
    for (std::size_t k = 0; k < h; ++k) {
      g[k] += dc * ws.hidden[k];
      ws.delta[k] += dc * w[k];
    }
    g[h] += dc;
  }
  for (std::size_t k = 0; k < h; ++k) {
    const double dz = ws.delta[k] * (1.0 - ws.hidden[k] * ws.hidden[k]);
    double* g = grad.data() + k * (d + 1);
    for (std::size_t j = 0; j < d; ++j) g[j] += dz * x[j];
    g[d] += dz;
  }
  return loss;
}

constexpr std::size_t kChunk = 32;
// Below this much work (examples x params) the parallel region is skipped.
constexpr std::size_t kParallelWork = 1 << 15;

// Validates outside parallel regions, where exceptions cannot propagate.
void check_example(const ModelState& m, std::span<const double> x, double label) {
  if (x.size() != m.spec.feature_dim) throw std::invalid_argument("example feature length does not match model");
  if (m.spec.kind != ModelKind::linear_regression) label_class(label, m.spec.n_classes);
}

}  // namespace

LossGrad loss_and_grad(const ModelState& model, std::span<const ExampleRecord> batch, Execution exec) {
  if (batch.empty()) throw std::invalid_argument("loss_and_grad: empty batch");
  for (const auto& ex : batch) check_example(model, ex.features, ex.label);
  const auto P = model.params.size();
  const auto n = batch.size();
  LossGrad out{0.0, std::vector<double>(P, 0.0)};

  if (exec == Execution::serial) {
    Workspace ws(model.spec);
    for (const auto& ex : batch) out.loss += example_loss(model, ex.features, ex.label, ws, out.grad);
  } else {
    const auto chunks = (n + kChunk - 1) / kChunk;
    std::vector<std::vector<double>> partial(chunks);
    std::vector<double> partial_loss(chunks, 0.0);
    const auto n_chunks = static_cast<std::int64_t>(chunks);
#pragma omp parallel for schedule(static) if (n * P >= kParallelWork)
    for (std::int64_t c = 0; c < n_chunks; ++c) {
      const auto ci = static_cast<std::size_t>(c);
      Workspace ws(model.spec);
      partial[ci].assign(P, 0.0);
      const auto end = std::min(n, (ci + 1) * kChunk);
      for (std::size_t i = ci * kChunk; i < end; ++i)
        partial_loss[ci] += example_loss(model, batch[i].features, batch[i].label, ws, partial[ci]);
    }
    for (std::size_t c = 0; c < chunks; ++c) {
      out.loss += partial_loss[c];
      for (std::size_t p = 0; p < P; ++p) out.grad[p] += partial[c][p];
    }
  }
  const double inv = 1.0 / static_cast<double>(n);
  out.loss *= inv;
  for (auto& g : out.grad) g *= inv;
  return out;
}

double batch_loss(const ModelState& model, std::span<const ExampleRecord> batch) {
  if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
  Workspace ws(model.spec);
  double total = 0.0;
  for (const auto& ex : batch) {
    check_example(model, ex.features, ex.label);
    total += example_loss(model, ex.features, ex.label, ws, {});
  }
  return total / static_cast<double>(batch.size());
}

std::vector<double> grad(const ModelState& model, const BatchRecord& batch, Execution exec) {
  auto lg = loss_and_grad(model, batch.examples, exec);
  if (!std::isfinite(lg.loss)) throw DivergenceError("non-finite training loss");
  return std::move(lg.grad);
}

double evaluate(const ModelState& model, const Dataset& data, Metric metric, Execution exec) {
  const bool regression = model.spec.kind == ModelKind::linear_regression;
  if (regression != (metric == Metric::mse))
    throw std::invalid_argument("metric " + std::string(to_string(metric)) + " does not fit model " +
                                std::string(to_string(model.spec.kind)));
  if (data.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
  if (data.feature_dim != model.spec.feature_dim) throw std::invalid_argument("evaluate: feature_dim mismatch");

  const auto n = data.size();
  for (std::size_t i = 0; i < n; ++i) check_example(model, data.row(i), data.labels[i]);
  const auto chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(chunks, 0.0);
  auto chunk_sum = [&](std::size_t c) {
    Workspace ws(model.spec);
    double acc = 0.0;
    const auto end = std::min(n, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      const auto x = data.row(i);
      const double label = data.labels[i];
      if (metric == Metric::accuracy) {
        forward(model, x, ws);
        const auto pred = static_cast<std::size_t>(std::max_element(ws.logits.begin(), ws.logits.end()) -
                                                   ws.logits.begin());
        acc += pred == label_class(label, model.spec.n_classes) ? 1.0 : 0.0;
      } else {
        // example_loss is half the squared error for regression.
        const double l = example_loss(model, x, label, ws, {});
        acc += metric == Metric::mse ? 2.0 * l : l;
      }
    }
    partial[c] = acc;
  };
  const auto n_chunks = static_cast<std::int64_t>(chunks);
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static) if (n * model.params.size() >= kParallelWork)
    for (std::int64_t c = 0; c < n_chunks; ++c) chunk_sum(static_cast<std::size_t>(c));
  } else {
    for (std::int64_t c = 0; c < n_chunks; ++c) chunk_sum(static_cast<std::size_t>(c));
  }
  double total = 0.0;
  for (double v : partial) total += v;
  return total / static_cast<double>(n);
}

}  // namespace dataecho
