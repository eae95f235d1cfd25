#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dataecho/random.hpp"

namespace dataecho {

/// Uniform index in [0, n) by rejection on 64-bit draws, so results do not
/// depend on the standard library's distribution implementation.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = Rng::max() - Rng::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

/// Fixed-capacity streaming shuffle buffer.
///
/// Items are stored until the buffer is full. After that every push evicts a
/// uniformly chosen slot, returns its item and takes its place. drain() then
/// empties the buffer in uniformly random order once the input ends.
template <typename Item>
class ShuffleBuffer {
 public:
  ShuffleBuffer(std::size_t capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {
    if (capacity == 0) throw std::invalid_argument("shuffle buffer capacity must be >= 1");
    slots_.reserve(capacity);
  }

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t fill_count() const noexcept { return slots_.size(); }
  bool full() const noexcept { return slots_.size() == capacity_; }
  bool empty() const noexcept { return slots_.empty(); }

  /// Returns nothing while filling; afterwards the evicted item.
  std::optional<Item> push(Item incoming) {
    if (!full()) {
      slots_.push_back(std::move(incoming));
      return std::nullopt;
    }
    const auto idx = uniform_index(rng_, slots_.size());
    Item out = std::exchange(slots_[idx], std::move(incoming));
    return out;
  }

  /// Removes one uniformly chosen held item; nullopt when empty.
  std::optional<Item> drain() {
    if (slots_.empty()) return std::nullopt;
    const auto idx = uniform_index(rng_, slots_.size());
    Item out = std::move(slots_[idx]);
    slots_[idx] = std::move(slots_.back());
    slots_.pop_back();
    return out;
  }

 private:
  std::size_t capacity_;
  Rng rng_;
  std::vector<Item> slots_;
};

/// Runs a finite sequence through a shuffle buffer and returns the output order.
template <typename Item>
std::vector<Item> shuffle_sequence(std::vector<Item> items, std::size_t capacity, std::uint64_t seed) {
  ShuffleBuffer<Item> buffer(capacity, seed);
  std::vector<Item> out;
  out.reserve(items.size());
  for (auto& item : items)
    if (auto evicted = buffer.push(std::move(item))) out.push_back(std::move(*evicted));
  while (auto rest = buffer.drain()) out.push_back(std::move(*rest));
  return out;
}

}  // namespace dataecho
