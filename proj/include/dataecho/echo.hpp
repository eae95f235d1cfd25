#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dataecho/random.hpp"

namespace dataecho {

/// Echoing factor e >= 1. Non-integral factors are realized per item as
/// integer_part repeats plus one extra repeat with probability frac.
class EchoFactor {
 public:
  EchoFactor() = default;
  explicit EchoFactor(double value);

  static EchoFactor from_parts(std::int64_t integer_part, double frac);

  double value() const noexcept { return static_cast<double>(integer_part_) + frac_; }
  std::int64_t integer_part() const noexcept { return integer_part_; }
  double frac() const noexcept { return frac_; }
  bool is_integral() const noexcept { return frac_ == 0.0; }

  friend bool operator==(const EchoFactor&, const EchoFactor&) = default;

 private:
  std::int64_t integer_part_ = 1;
  double frac_ = 0.0;
};

/// Number of copies to emit for one item: integer_part, or integer_part + 1
/// with probability frac. Draws from rng only when frac > 0.
std::int64_t realized_repeats(const EchoFactor& e, Rng& rng);

/// Streaming echo stage over any item type with an `echo_index` member.
/// Copies of one item are emitted back to back with echo_index 0..r-1.
template <typename Item>
class Echoer {
 public:
  Echoer(EchoFactor e, std::uint64_t seed) : factor_(e), rng_(seed) {}

  void push(Item item) {
    pending_ = std::move(item);
    remaining_ = realized_repeats(factor_, rng_);
    next_index_ = 0;
  }

  bool has_pending() const noexcept { return remaining_ > 0; }

  /// Emits the next copy of the held item. Requires has_pending().
  Item pop() {
    Item out = *pending_;
    out.echo_index = next_index_++;
    if (--remaining_ == 0) pending_.reset();
    return out;
  }

  const EchoFactor& factor() const noexcept { return factor_; }

 private:
  EchoFactor factor_;
  Rng rng_;
  std::optional<Item> pending_;
  std::int64_t remaining_ = 0;
  std::int64_t next_index_ = 0;
};

/// Applies echoing to a finite sequence in one go.
template <typename Item>
std::vector<Item> echo_stage(const std::vector<Item>& items, const EchoFactor& e, Rng& rng) {
  std::vector<Item> out;
  out.reserve(static_cast<std::size_t>(static_cast<double>(items.size()) * e.value()) + 1);
  for (const auto& item : items) {
    const auto r = realized_repeats(e, rng);
    for (std::int64_t k = 0; k < r; ++k) {
      out.push_back(item);
      out.back().echo_index = k;
    }
  }
  return out;
}

}  // namespace dataecho
