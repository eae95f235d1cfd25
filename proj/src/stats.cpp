#include "dataecho/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "dataecho/random.hpp"

namespace dataecho {

BatchDuplication tally_batch(std::span<const std::int64_t> read_ids) {
  std::vector<std::int64_t> sorted(read_ids.begin(), read_ids.end());
  std::sort(sorted.begin(), sorted.end());
  BatchDuplication out;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    ++out.distinct;
    if (j - i > 1) out.duplicated += static_cast<std::int64_t>(j - i);
    i = j;
  }
  return out;
}

namespace {

struct ReplicateTally {
  double dup_fraction_sum = 0.0;
  double identity_sum = 0.0;
  double distinct_sum = 0.0;
  std::int64_t batches = 0;
};

ReplicateTally run_replicate(const PipelineConfig& base, std::shared_ptr<const Dataset> dataset,
                             std::uint64_t seed, std::int64_t batch_cap) {
  PipelineConfig cfg = base;
  cfg.epochs = 1;
  cfg.feature_dim = 0;
  cfg.augment_noise_scale = 0.0;
  cfg.rng_seed = seed;
  Pipeline pipeline(cfg, std::move(dataset));

  std::vector<std::vector<std::int64_t>> batches;
  ReplicateTally tally;
  while (static_cast<std::int64_t>(batches.size()) < batch_cap) {
    auto batch = pipeline.next_batch();
    if (!batch) break;
    std::vector<std::int64_t> ids;
    ids.reserve(batch->examples.size());
    for (const auto& ex : batch->examples) ids.push_back(ex.read_id);
    const auto dup = tally_batch(ids);
    tally.dup_fraction_sum += static_cast<double>(dup.duplicated) / static_cast<double>(ids.size());
    tally.distinct_sum += static_cast<double>(dup.distinct);
    std::sort(ids.begin(), ids.end());
    batches.push_back(std::move(ids));
  }
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const bool same_prev = b > 0 && batches[b] == batches[b - 1];
    const bool same_next = b + 1 < batches.size() && batches[b] == batches[b + 1];
    if (same_prev || same_next) tally.identity_sum += 1.0;
  }
  tally.batches = static_cast<std::int64_t>(batches.size());
  return tally;
}

// Ratio estimator sum(y) / sum(n) with its linearized standard error.
std::pair<double, double> ratio_estimate(const std::vector<ReplicateTally>& reps, double ReplicateTally::*field) {
  double total_y = 0.0, total_n = 0.0;
  for (const auto& r : reps) {
    total_y += r.*field;
    total_n += static_cast<double>(r.batches);
  }
  if (total_n == 0.0) return {0.0, 0.0};
  const double ratio = total_y / total_n;
  const auto k = static_cast<double>(reps.size());
  if (reps.size() < 2) return {ratio, 0.0};
  double ss = 0.0;
  for (const auto& r : reps) {
    const double d = r.*field - ratio * static_cast<double>(r.batches);
    ss += d * d;
  }
  const double mean_n = total_n / k;
  return {ratio, std::sqrt(ss / (k * (k - 1.0))) / mean_n};
}

}  // namespace

DuplicationReport measure_duplication(const PipelineConfig& config, std::int64_t n_batches, std::uint64_t seed,
                                      Execution exec) {
  if (n_batches < 1) throw std::invalid_argument("measure_duplication: n_batches must be >= 1");
  config.validate();
  auto dataset = std::make_shared<const Dataset>(Dataset::indices_only(static_cast<std::size_t>(config.dataset_size)));

  const double expected_items = static_cast<double>(config.dataset_size) * config.echo_factor.value();
  const double per_epoch = config.echo_insertion == EchoInsertion::batch
                               ? std::floor(static_cast<double>(config.dataset_size) /
                                            static_cast<double>(config.batch_size)) * config.echo_factor.value()
                               : std::floor(expected_items / static_cast<double>(config.batch_size));
  if (per_epoch < 1.0) throw std::invalid_argument("measure_duplication: an epoch yields no full batch");
  const auto replicates = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::ceil(static_cast<double>(n_batches) / per_epoch)));
  const std::int64_t batch_cap = replicates == 1 ? n_batches : INT64_MAX;

  std::vector<ReplicateTally> tallies(static_cast<std::size_t>(replicates));
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < replicates; ++r)
      tallies[static_cast<std::size_t>(r)] =
          run_replicate(config, dataset, derive_seed(seed, {static_cast<std::uint64_t>(r)}), batch_cap);
  } else {
    for (std::int64_t r = 0; r < replicates; ++r)
      tallies[static_cast<std::size_t>(r)] =
          run_replicate(config, dataset, derive_seed(seed, {static_cast<std::uint64_t>(r)}), batch_cap);
  }

  DuplicationReport report;
  for (const auto& t : tallies) report.batches_measured += t.batches;
  std::tie(report.within_batch_dup_fraction, report.within_batch_dup_stderr) =
      ratio_estimate(tallies, &ReplicateTally::dup_fraction_sum);
  std::tie(report.adjacent_batch_identity_rate, report.adjacent_batch_identity_stderr) =
      ratio_estimate(tallies, &ReplicateTally::identity_sum);
  std::tie(report.distinct_reads_per_batch_mean, report.distinct_reads_stderr) =
      ratio_estimate(tallies, &ReplicateTally::distinct_sum);
  return report;
}

DuplicationReport ExactDuplication::as_report() const {
  DuplicationReport r;
  r.within_batch_dup_fraction = static_cast<double>(within_batch_dup_fraction);
  r.adjacent_batch_identity_rate = static_cast<double>(adjacent_batch_identity_rate);
  r.distinct_reads_per_batch_mean = static_cast<double>(distinct_reads_per_batch_mean);
  r.batches_measured = batches_per_epoch;
  return r;
}

namespace {

struct OracleValue {
  Rational dup_sum;
  Rational identity_sum;
  Rational distinct_sum;
};

// Exhaustive expectation over all shuffle-buffer choice sequences. Slots
// holding the same read are merged and weighted by multiplicity, which keeps
// the state space small without changing the distribution.
class DuplicationEnumerator {
 public:
  DuplicationEnumerator(int dataset, int buffer, int batch, int echo)
      : buffer_(static_cast<std::size_t>(buffer)), batch_(static_cast<std::size_t>(batch)) {
    for (int i = 0; i < dataset; ++i)
      for (int k = 0; k < echo; ++k) stream_.push_back(static_cast<std::uint8_t>(i));
  }

  OracleValue solve() { return value(State{}); }

 private:
  struct State {
    std::size_t pos = 0;
    std::vector<std::uint8_t> held;   // sorted
    std::vector<std::uint8_t> batch;  // sorted partial batch
    std::vector<std::uint8_t> prev;   // sorted previous batch, empty if none
    bool prev_counted = false;

    std::string key() const {
      std::string k;
      k.push_back(static_cast<char>(pos));
      k.push_back(static_cast<char>(prev_counted));
      for (const auto* v : {&held, &batch, &prev}) {
        k.push_back('|');
        k.append(v->begin(), v->end());
      }
      return k;
    }
  };

  static void insert_sorted(std::vector<std::uint8_t>& v, std::uint8_t x) {
    v.insert(std::upper_bound(v.begin(), v.end(), x), x);
  }

  // Appends `read` to the partial batch, closing the batch when full.
  OracleValue emit(State s, std::uint8_t read) {
    insert_sorted(s.batch, read);
    OracleValue here;
    if (s.batch.size() == batch_) {
      std::vector<std::int64_t> ids(s.batch.begin(), s.batch.end());
      const auto dup = tally_batch(ids);
      here.dup_sum = Rational(dup.duplicated, static_cast<std::int64_t>(batch_));
      here.distinct_sum = dup.distinct;
      const bool same = !s.prev.empty() && s.prev == s.batch;
      if (same) here.identity_sum = s.prev_counted ? 1 : 2;
      s.prev = std::move(s.batch);
      s.batch.clear();
      s.prev_counted = same;
    }
    auto rest = value(std::move(s));
    rest.dup_sum += here.dup_sum;
    rest.identity_sum += here.identity_sum;
    rest.distinct_sum += here.distinct_sum;
    return rest;
  }

  OracleValue value(State s) {
    const bool input_left = s.pos < stream_.size();
    if (!input_left && s.held.empty()) return {};
    if (input_left && s.held.size() < buffer_) {
      insert_sorted(s.held, stream_[s.pos++]);
      return value(std::move(s));
    }
    const auto key = s.key();
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;

    OracleValue total;
    const auto slots = static_cast<std::int64_t>(s.held.size());
    for (std::size_t i = 0; i < s.held.size();) {
      std::size_t j = i;
      while (j < s.held.size() && s.held[j] == s.held[i]) ++j;
      const std::uint8_t chosen = s.held[i];
      State next = s;
      next.held.erase(next.held.begin() + static_cast<std::ptrdiff_t>(i));
      if (input_left) insert_sorted(next.held, stream_[next.pos++]);
      const auto branch = emit(std::move(next), chosen);
      const Rational weight(static_cast<std::int64_t>(j - i), slots);
      total.dup_sum += weight * branch.dup_sum;
      total.identity_sum += weight * branch.identity_sum;
      total.distinct_sum += weight * branch.distinct_sum;
      i = j;
    }
    memo_.emplace(key, total);
    return total;
  }

  std::size_t buffer_;
  std::size_t batch_;
  std::vector<std::uint8_t> stream_;
  std::map<std::string, OracleValue> memo_;
};

}  // namespace

ExactDuplication duplication_oracle(int dataset_size, int buffer_size, int batch_size, int echo_factor) {
  auto check = [](int v, int hi, const char* name) {
    if (v < 1 || v > hi)
      throw std::invalid_argument(std::string("duplication_oracle: ") + name + " must be in [1, " +
                                  std::to_string(hi) + "], got " + std::to_string(v));
  };
  check(dataset_size, 6, "dataset_size");
  check(buffer_size, 4, "buffer_size");
  check(batch_size, 4, "batch_size");
  check(echo_factor, 3, "echo_factor");
  const int batches = dataset_size * echo_factor / batch_size;
  if (batches == 0) throw std::invalid_argument("duplication_oracle: an epoch yields no full batch");

  const auto v = DuplicationEnumerator(dataset_size, buffer_size, batch_size, echo_factor).solve();
  ExactDuplication out;
  out.batches_per_epoch = batches;
  out.within_batch_dup_fraction = v.dup_sum / batches;
  out.adjacent_batch_identity_rate = v.identity_sum / batches;
  out.distinct_reads_per_batch_mean = v.distinct_sum / batches;
  return out;
}

}  // namespace dataecho
