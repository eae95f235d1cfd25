#pragma once

#include <cstdint>
#include <span>

#include <boost/multiprecision/cpp_int.hpp>

#include "dataecho/parallel.hpp"
#include "dataecho/pipeline.hpp"

namespace dataecho {

/// Repetition inside and across batches. Two examples are duplicates when
/// they share a read_id, whatever augmentation did to them.
struct DuplicationReport {
  /// Mean over batches of (examples sharing a read_id with another member) / batch size.
  double within_batch_dup_fraction = 0.0;
  /// Fraction of batches holding the same reads as the previous or next batch.
  double adjacent_batch_identity_rate = 0.0;
  double distinct_reads_per_batch_mean = 0.0;

  double within_batch_dup_stderr = 0.0;
  double adjacent_batch_identity_stderr = 0.0;
  double distinct_reads_stderr = 0.0;

  std::int64_t batches_measured = 0;
};

/// Tally for one batch: number of members whose read_id occurs more than once.
struct BatchDuplication {
  std::int64_t duplicated = 0;
  std::int64_t distinct = 0;
};
BatchDuplication tally_batch(std::span<const std::int64_t> read_ids);

/// Monte Carlo estimate from the real pipeline. Runs independent single-epoch
/// replicates of `config` (seeded from `seed`, featureless rows) until at
/// least `n_batches` batches are expected, then pools them. Standard errors
/// come from the replicate-level ratio estimator.
DuplicationReport measure_duplication(const PipelineConfig& config, std::int64_t n_batches, std::uint64_t seed,
                                      Execution exec = Execution::parallel);

using Rational = boost::multiprecision::cpp_rational;

struct ExactDuplication {
  Rational within_batch_dup_fraction;
  Rational adjacent_batch_identity_rate;
  Rational distinct_reads_per_batch_mean;
  std::int64_t batches_per_epoch = 0;

  DuplicationReport as_report() const;
};

/// Exact expectations for one epoch of example echoing (echo -> shuffle ->
/// batch) by exhaustive enumeration of every shuffle-buffer choice.
/// Bounds: dataset <= 6, buffer <= 4, batch <= 4, e <= 3, all >= 1;
/// throws std::invalid_argument outside them or when no full batch exists.
ExactDuplication duplication_oracle(int dataset_size, int buffer_size, int batch_size, int echo_factor);

}  // namespace dataecho
