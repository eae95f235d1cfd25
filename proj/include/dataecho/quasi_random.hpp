#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dataecho {

enum class DimKind { log_uniform, uniform, integer_range };

std::string_view to_string(DimKind kind) noexcept;
DimKind parse_dim_kind(std::string_view name);

struct SearchDim {
  std::string name;
  DimKind kind = DimKind::uniform;
  double low = 0.0;
  double high = 1.0;
};

struct SearchSpace {
  std::vector<SearchDim> dims;
  std::int64_t n_trials = 1;
  std::int64_t n_searches = 5;

  void validate() const;
};

/// Halton sequence with random digit permutations: one permutation of
/// {0..b-1} per dimension and digit position, drawn from the seed. Index 0
/// is a valid point.
class ScrambledHalton {
 public:
  ScrambledHalton(std::size_t dims, std::uint64_t seed);

  std::size_t dims() const noexcept { return bases_.size(); }
  double component(std::uint64_t index, std::size_t dim) const;
  std::vector<double> point(std::uint64_t index) const;

  static constexpr std::size_t kMaxDims = 32;

 private:
  std::vector<std::uint32_t> bases_;
  // perms_[dim][level * base + digit]
  std::vector<std::vector<std::uint8_t>> perms_;
  std::vector<int> levels_;
};

/// Maps u in [0,1) onto a dimension: linear for uniform, geometric for
/// log_uniform, floor(low + u (high - low + 1)) clamped for integer_range.
double map_unit(const SearchDim& dim, double u);

/// Inverse of map_unit up to integer rounding; position of `value` in [0,1].
double unit_position(const SearchDim& dim, double value);

/// `count` points starting at sequence index `first`, each mapped through its
/// dimension. Row i holds the values for index first + i, ordered as dims.
std::vector<std::vector<double>> quasi_random_points(const SearchSpace& space, std::uint64_t seed, std::size_t count,
                                                     std::uint64_t first = 0);

}  // namespace dataecho
