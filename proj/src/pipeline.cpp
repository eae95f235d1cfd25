#include "dataecho/pipeline.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "dataecho/random.hpp"
#include "dataecho/shuffle_buffer.hpp"

namespace dataecho {

std::string_view to_string(EchoInsertion insertion) noexcept {
  switch (insertion) {
    case EchoInsertion::none: return "none";
    case EchoInsertion::example_before_augment: return "example_before_augment";
    case EchoInsertion::example_after_augment: return "example_after_augment";
    case EchoInsertion::batch: return "batch";
  }
  return "?";
}

EchoInsertion parse_echo_insertion(std::string_view name) {
  for (auto v : {EchoInsertion::none, EchoInsertion::example_before_augment,
                 EchoInsertion::example_after_augment, EchoInsertion::batch})
    if (to_string(v) == name) return v;
  throw std::invalid_argument("unknown echo_insertion '" + std::string(name) + "'");
}

std::string_view to_string(StageKind kind) noexcept {
  switch (kind) {
    case StageKind::source: return "source";
    case StageKind::echo: return "echo";
    case StageKind::shuffle: return "shuffle";
    case StageKind::augment: return "augment";
    case StageKind::batch: return "batch";
  }
  return "?";
}

Dataset Dataset::indices_only(std::size_t n) {
  Dataset d;
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.labels[i] = static_cast<double>(i);
  return d;
}

void PipelineConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("pipeline config: " + what); };
  if (dataset_size < 1) fail("dataset_size must be >= 1");
  if (feature_dim < 0) fail("feature_dim must be >= 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (shuffle_buffer_size < 1) fail("shuffle_buffer_size must be >= 1");
  if (epochs < 0) fail("epochs must be >= 0");
  if (!(augment_noise_scale >= 0.0) || !std::isfinite(augment_noise_scale))
    fail("augment_noise_scale must be finite and >= 0");
  if (echo_insertion == EchoInsertion::none && echo_factor.value() > 1.0)
    fail("echo_factor > 1 requires an echo_insertion other than none");
}

double keyed_normal(std::uint64_t aug_seed, std::int64_t read_id, std::int64_t echo_index,
                    std::size_t component) noexcept {
  const std::uint64_t key = derive_seed(aug_seed, {static_cast<std::uint64_t>(read_id),
                                                   static_cast<std::uint64_t>(echo_index), component});
  // Box-Muller on two counter-derived uniforms; u1 is kept away from zero.
  const double u1 = (static_cast<double>(mix64(key) >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = unit_double(mix64(key ^ 0xd1b54a32d192ed03ULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

ExampleRecord augment(ExampleRecord record, double noise_scale) {
  if (noise_scale == 0.0) return record;
  for (std::size_t j = 0; j < record.features.size(); ++j)
    record.features[j] += noise_scale * keyed_normal(record.aug_seed, record.read_id, record.echo_index, j);
  return record;
}

class ExampleStream {
 public:
  virtual ~ExampleStream() = default;
  virtual std::optional<ExampleRecord> next() = 0;
};

namespace {

class SourceStage final : public ExampleStream {
 public:
  SourceStage(std::shared_ptr<const Dataset> dataset, std::int64_t epochs, std::uint64_t aug_seed,
              PipelineCounters& counters)
      : dataset_(std::move(dataset)), epochs_(epochs), aug_seed_(aug_seed), counters_(counters) {}

  std::optional<ExampleRecord> next() override {
    const auto n = static_cast<std::int64_t>(dataset_->size());
    if (epochs_ > 0 && position_ >= n * epochs_) return std::nullopt;
    const auto index = position_ % n;
    ExampleRecord record;
    record.source_index = index;
    record.read_id = position_++;
    record.aug_seed = aug_seed_;
    const auto row = dataset_->row(static_cast<std::size_t>(index));
    record.features.assign(row.begin(), row.end());
    record.label = dataset_->labels[static_cast<std::size_t>(index)];
    ++counters_.fresh_examples;
    return record;
  }

 private:
  std::shared_ptr<const Dataset> dataset_;
  std::int64_t epochs_;
  std::uint64_t aug_seed_;
  PipelineCounters& counters_;
  std::int64_t position_ = 0;
};

class EchoStage final : public ExampleStream {
 public:
  EchoStage(std::unique_ptr<ExampleStream> upstream, EchoFactor e, std::uint64_t seed)
      : upstream_(std::move(upstream)), echoer_(e, seed) {}

  std::optional<ExampleRecord> next() override {
    if (!echoer_.has_pending()) {
      auto item = upstream_->next();
      if (!item) return std::nullopt;
      echoer_.push(std::move(*item));
    }
    return echoer_.pop();
  }

 private:
  std::unique_ptr<ExampleStream> upstream_;
  Echoer<ExampleRecord> echoer_;
};

class ShuffleStage final : public ExampleStream {
 public:
  ShuffleStage(std::unique_ptr<ExampleStream> upstream, std::size_t capacity, std::uint64_t seed,
               PipelineCounters& counters)
      : upstream_(std::move(upstream)), buffer_(capacity, seed), counters_(counters) {}

  std::optional<ExampleRecord> next() override {
    while (!exhausted_) {
      auto incoming = upstream_->next();
      if (!incoming) {
        exhausted_ = true;
        break;
      }
      auto out = buffer_.push(std::move(*incoming));
      note_fill();
      if (out) return out;
    }
    return buffer_.drain();
  }

 private:
  void note_fill() {
    const auto fill = static_cast<std::int64_t>(buffer_.fill_count());
    if (fill > counters_.max_shuffle_fill) counters_.max_shuffle_fill = fill;
  }

  std::unique_ptr<ExampleStream> upstream_;
  ShuffleBuffer<ExampleRecord> buffer_;
  PipelineCounters& counters_;
  bool exhausted_ = false;
};

class AugmentStage final : public ExampleStream {
 public:
  AugmentStage(std::unique_ptr<ExampleStream> upstream, double noise_scale)
      : upstream_(std::move(upstream)), noise_scale_(noise_scale) {}

  std::optional<ExampleRecord> next() override {
    auto item = upstream_->next();
    if (!item) return std::nullopt;
    return augment(std::move(*item), noise_scale_);
  }

 private:
  std::unique_ptr<ExampleStream> upstream_;
  double noise_scale_;
};

}  // namespace

Pipeline::Pipeline(const PipelineConfig& config, std::shared_ptr<const Dataset> dataset)
    : config_(config), counters_(std::make_unique<PipelineCounters>()) {
  config_.validate();
  if (!dataset) throw std::invalid_argument("pipeline requires a dataset");
  if (static_cast<std::int64_t>(dataset->size()) != config_.dataset_size)
    throw std::invalid_argument("pipeline config: dataset_size does not match the dataset");
  if (static_cast<std::int64_t>(dataset->feature_dim) != config_.feature_dim)
    throw std::invalid_argument("pipeline config: feature_dim does not match the dataset");

  const auto seed = config_.rng_seed;
  const auto aug_seed = derive_seed(seed, {seed_role::kAugment});
  const auto buffer = static_cast<std::size_t>(config_.shuffle_buffer_size);
  auto& counters = *counters_;

  std::unique_ptr<ExampleStream> head =
      std::make_unique<SourceStage>(std::move(dataset), config_.epochs, aug_seed, counters);
  stages_.push_back(StageKind::source);

  auto add_echo = [&] {
    head = std::make_unique<EchoStage>(std::move(head), config_.echo_factor,
                                       derive_seed(seed, {seed_role::kEcho}));
    stages_.push_back(StageKind::echo);
  };
  auto add_shuffle = [&] {
    head = std::make_unique<ShuffleStage>(std::move(head), buffer, derive_seed(seed, {seed_role::kShuffle}),
                                          counters);
    stages_.push_back(StageKind::shuffle);
  };
  auto add_augment = [&] {
    head = std::make_unique<AugmentStage>(std::move(head), config_.augment_noise_scale);
    stages_.push_back(StageKind::augment);
  };

  switch (config_.echo_insertion) {
    case EchoInsertion::none:
    case EchoInsertion::batch:
      add_shuffle();
      add_augment();
      break;
    case EchoInsertion::example_before_augment:
      add_echo();
      add_shuffle();
      add_augment();
      break;
    case EchoInsertion::example_after_augment:
      add_augment();
      add_echo();
      add_shuffle();
      break;
  }
  head_ = std::move(head);
  stages_.push_back(StageKind::batch);

  if (config_.echo_insertion == EchoInsertion::batch) {
    batch_echo_.emplace(config_.echo_factor, derive_seed(seed, {seed_role::kEcho}));
    stages_.push_back(StageKind::echo);
  }
}

Pipeline::~Pipeline() = default;
Pipeline::Pipeline(Pipeline&&) noexcept = default;
Pipeline& Pipeline::operator=(Pipeline&&) noexcept = default;

std::optional<BatchRecord> Pipeline::assemble_batch() {
  BatchRecord batch;
  batch.examples.reserve(static_cast<std::size_t>(config_.batch_size));
  while (static_cast<std::int64_t>(batch.examples.size()) < config_.batch_size) {
    auto item = head_->next();
    if (!item) {
      counters_->dropped_remainder += static_cast<std::int64_t>(batch.examples.size());
      return std::nullopt;
    }
    ++counters_->examples_batched;
    batch.examples.push_back(std::move(*item));
  }
  return batch;
}

std::optional<BatchRecord> Pipeline::next_batch() {
  std::optional<BatchRecord> out;
  if (batch_echo_) {
    if (!batch_echo_->has_pending()) {
      auto fresh = assemble_batch();
      if (!fresh) return std::nullopt;
      batch_echo_->push(std::move(*fresh));
    }
    out = batch_echo_->pop();
  } else {
    out = assemble_batch();
    if (!out) return std::nullopt;
  }
  out->batch_id = next_batch_id_++;
  out->fresh_reads = counters_->fresh_examples;
  ++counters_->batches_emitted;
  counters_->examples_emitted += static_cast<std::int64_t>(out->examples.size());
  return out;
}

Pipeline build_pipeline(const PipelineConfig& config, std::shared_ptr<const Dataset> dataset) {
  return Pipeline(config, std::move(dataset));
}

PrefetchPipeline::PrefetchPipeline(Pipeline pipeline, std::size_t queue_capacity)
    : pipeline_(std::move(pipeline)), queue_(queue_capacity) {
  producer_ = std::jthread([this](std::stop_token stop) {
    while (!stop.stop_requested()) {
      auto batch = pipeline_.next_batch();
      if (!batch || !queue_.push(std::move(*batch))) break;
    }
    queue_.close();
  });
}

PrefetchPipeline::~PrefetchPipeline() { finish(); }

std::optional<BatchRecord> PrefetchPipeline::next_batch() { return queue_.pop(); }

void PrefetchPipeline::finish() {
  if (!producer_.joinable()) return;
  producer_.request_stop();
  queue_.close();
  producer_.join();
}

}  // namespace dataecho
