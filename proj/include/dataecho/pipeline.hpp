#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "dataecho/bounded_queue.hpp"
#include "dataecho/echo.hpp"

namespace dataecho {

/// Where the echo stage sits relative to augmentation and batching.
enum class EchoInsertion { none, example_before_augment, example_after_augment, batch };

std::string_view to_string(EchoInsertion insertion) noexcept;
EchoInsertion parse_echo_insertion(std::string_view name);

/// One training example plus the origin needed for fresh-example
/// accounting. Echoed copies share read_id and differ in echo_index.
struct ExampleRecord {
  std::int64_t source_index = 0;
  std::int64_t read_id = 0;
  std::int64_t echo_index = 0;
  std::uint64_t aug_seed = 0;
  std::vector<double> features;
  double label = 0.0;
};

struct BatchRecord {
  std::int64_t batch_id = 0;
  std::vector<ExampleRecord> examples;
  /// Nonzero only for repeated batches under batch echoing.
  std::int64_t echo_index = 0;
  /// Fresh reads performed by the source when this batch left the pipeline.
  std::int64_t fresh_reads = 0;
};

/// In-memory dataset, row-major features.
struct Dataset {
  std::size_t feature_dim = 0;
  std::vector<double> features;
  std::vector<double> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const double> row(std::size_t i) const noexcept {
    return {features.data() + i * feature_dim, feature_dim};
  }

  /// Dataset of `n` featureless rows labelled by index; used when only
  /// read identity matters.
  static Dataset indices_only(std::size_t n);
};

struct PipelineConfig {
  std::int64_t dataset_size = 0;
  std::int64_t feature_dim = 0;
  std::int64_t batch_size = 1;
  std::int64_t shuffle_buffer_size = 1;
  EchoInsertion echo_insertion = EchoInsertion::none;
  EchoFactor echo_factor{};
  std::uint64_t rng_seed = 0;
  double augment_noise_scale = 0.0;
  /// Passes over the dataset before end-of-stream; 0 cycles forever.
  std::int64_t epochs = 0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Adds deterministic Gaussian noise keyed by (read_id, echo_index, aug_seed).
ExampleRecord augment(ExampleRecord record, double noise_scale);

/// Standard normal deviate keyed by a counter tuple; the noise source behind augment().
double keyed_normal(std::uint64_t aug_seed, std::int64_t read_id, std::int64_t echo_index, std::size_t component) noexcept;

struct PipelineCounters {
  std::int64_t fresh_examples = 0;    // reads performed by the source
  std::int64_t examples_batched = 0;  // examples that entered the batcher
  std::int64_t batches_emitted = 0;   // batches returned, echoed copies included
  std::int64_t examples_emitted = 0;  // examples inside returned batches
  std::int64_t dropped_remainder = 0; // examples in a discarded partial batch
  std::int64_t max_shuffle_fill = 0;  // high-water mark of the shuffle buffer
};

enum class StageKind { source, echo, shuffle, augment, batch };
std::string_view to_string(StageKind kind) noexcept;

/// Anything that yields batches; the trainer consumes this.
class BatchStream {
 public:
  virtual ~BatchStream() = default;
  /// nullopt signals end of stream.
  virtual std::optional<BatchRecord> next_batch() = 0;
};

class ExampleStream;

/// Pull-based pipeline. Stage order depends on the echo insertion point:
///
///   none                    source -> shuffle -> augment -> batch
///   example_before_augment  source -> echo -> shuffle -> augment -> batch
///   example_after_augment   source -> augment -> echo -> shuffle -> batch
///   batch                   source -> shuffle -> augment -> batch -> echo
///
/// There is always exactly one shuffle buffer. Example echoing places it
/// right after the echo stage; batch echoing repeats batches unshuffled.
class Pipeline final : public BatchStream {
 public:
  Pipeline(const PipelineConfig& config, std::shared_ptr<const Dataset> dataset);
  ~Pipeline() override;
  Pipeline(Pipeline&&) noexcept;
  Pipeline& operator=(Pipeline&&) noexcept;

  std::optional<BatchRecord> next_batch() override;

  const PipelineCounters& counters() const noexcept { return *counters_; }
  const std::vector<StageKind>& stages() const noexcept { return stages_; }
  const PipelineConfig& config() const noexcept { return config_; }

 private:
  std::optional<BatchRecord> assemble_batch();

  PipelineConfig config_;
  std::unique_ptr<PipelineCounters> counters_;
  std::unique_ptr<ExampleStream> head_;
  std::vector<StageKind> stages_;
  std::optional<Echoer<BatchRecord>> batch_echo_;
  std::int64_t next_batch_id_ = 0;
};

Pipeline build_pipeline(const PipelineConfig& config, std::shared_ptr<const Dataset> dataset);

/// Runs a Pipeline on a producer thread and hands batches over through a
/// bounded queue. The batch sequence is identical to pulling the wrapped
/// pipeline directly; counters() is only meaningful after finish().
class PrefetchPipeline final : public BatchStream {
 public:
  PrefetchPipeline(Pipeline pipeline, std::size_t queue_capacity = 2);
  ~PrefetchPipeline() override;

  std::optional<BatchRecord> next_batch() override;

  /// Stops the producer and joins it.
  void finish();
  const PipelineCounters& counters() const noexcept { return pipeline_.counters(); }

 private:
  Pipeline pipeline_;
  BoundedQueue<BatchRecord> queue_;
  std::jthread producer_;
};

}  // namespace dataecho
