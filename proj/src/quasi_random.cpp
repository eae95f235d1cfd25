#include "dataecho/quasi_random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dataecho/random.hpp"
#include "dataecho/shuffle_buffer.hpp"

namespace dataecho {

namespace {
constexpr std::uint32_t kPrimes[ScrambledHalton::kMaxDims] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,  31,
                                                               37, 41, 43, 47, 53, 59, 61, 67, 71, 73,  79,
                                                               83, 89, 97, 101, 103, 107, 109, 113, 127, 131};
}

std::string_view to_string(DimKind kind) noexcept {
  switch (kind) {
    case DimKind::log_uniform: return "log_uniform";
    case DimKind::uniform: return "uniform";
    case DimKind::integer_range: return "integer_range";
  }
  return "?";
}

DimKind parse_dim_kind(std::string_view name) {
  for (auto k : {DimKind::log_uniform, DimKind::uniform, DimKind::integer_range})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown search dimension kind '" + std::string(name) + "'");
}

void SearchSpace::validate() const {
  if (n_trials < 1) throw std::invalid_argument("search: n_trials must be >= 1");
  if (n_searches < 1) throw std::invalid_argument("search: n_searches must be >= 1");
  if (dims.size() > ScrambledHalton::kMaxDims) throw std::invalid_argument("search: too many dimensions");
  for (const auto& d : dims) {
    if (!(d.low < d.high)) throw std::invalid_argument("search: dimension '" + d.name + "' needs low < high");
    if (d.kind == DimKind::log_uniform && !(d.low > 0.0))
      throw std::invalid_argument("search: log_uniform dimension '" + d.name + "' needs low > 0");
  }
}

ScrambledHalton::ScrambledHalton(std::size_t dims, std::uint64_t seed) {
  if (dims > kMaxDims) throw std::invalid_argument("ScrambledHalton: too many dimensions");
  Rng rng(seed);
  for (std::size_t d = 0; d < dims; ++d) {
    const auto base = kPrimes[d];
    // Enough digits to resolve the full double mantissa.
    const int levels = static_cast<int>(std::ceil(53.0 / std::log2(static_cast<double>(base))));
    std::vector<std::uint8_t> perm(static_cast<std::size_t>(levels) * base);
    for (int l = 0; l < levels; ++l) {
      auto first = perm.begin() + static_cast<std::ptrdiff_t>(l) * base;
      std::iota(first, first + base, std::uint8_t{0});
      for (std::uint32_t i = base - 1; i > 0; --i)  // Fisher-Yates
        std::swap(first[i], first[static_cast<std::ptrdiff_t>(uniform_index(rng, i + 1))]);
    }
    bases_.push_back(base);
    perms_.push_back(std::move(perm));
    levels_.push_back(levels);
  }
}

double ScrambledHalton::component(std::uint64_t index, std::size_t dim) const {
  const auto base = bases_.at(dim);
  const auto& perm = perms_[dim];
  const double inv_base = 1.0 / base;
  double scale = inv_base;
  double value = 0.0;
  for (int l = 0; l < levels_[dim]; ++l) {
    const auto digit = index % base;
    index /= base;
    value += perm[static_cast<std::size_t>(l) * base + digit] * scale;
    scale *= inv_base;
  }
  return std::min(value, std::nextafter(1.0, 0.0));
}

std::vector<double> ScrambledHalton::point(std::uint64_t index) const {
  std::vector<double> p(dims());
  for (std::size_t d = 0; d < dims(); ++d) p[d] = component(index, d);
  return p;
}

double map_unit(const SearchDim& dim, double u) {
  switch (dim.kind) {
    case DimKind::uniform:
      return dim.low + u * (dim.high - dim.low);
    case DimKind::log_uniform:
      return std::exp(std::log(dim.low) + u * (std::log(dim.high) - std::log(dim.low)));
    case DimKind::integer_range: {
      const double v = std::floor(dim.low + u * (dim.high - dim.low + 1.0));
      return std::clamp(v, dim.low, dim.high);
    }
  }
  return dim.low;
}

double unit_position(const SearchDim& dim, double value) {
  double u = 0.0;
  switch (dim.kind) {
    case DimKind::uniform:
    case DimKind::integer_range:
      u = (value - dim.low) / (dim.high - dim.low);
      break;
    case DimKind::log_uniform:
      u = std::log(value / dim.low) / std::log(dim.high / dim.low);
      break;
  }
  return std::clamp(u, 0.0, 1.0);
}

std::vector<std::vector<double>> quasi_random_points(const SearchSpace& space, std::uint64_t seed, std::size_t count,
                                                     std::uint64_t first) {
  space.validate();
  const ScrambledHalton seq(space.dims.size(), seed);
  std::vector<std::vector<double>> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto u = seq.point(first + i);
    for (std::size_t d = 0; d < u.size(); ++d) u[d] = map_unit(space.dims[d], u[d]);
    out[i] = std::move(u);
  }
  return out;
}

}  // namespace dataecho
