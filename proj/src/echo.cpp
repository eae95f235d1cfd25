#include "dataecho/echo.hpp"

#include <cmath>
#include <string>

namespace dataecho {

EchoFactor::EchoFactor(double value) {
  if (!std::isfinite(value) || value < 1.0)
    throw std::invalid_argument("echo factor must be a finite value >= 1, got " + std::to_string(value));
  const double whole = std::floor(value);
  integer_part_ = static_cast<std::int64_t>(whole);
  frac_ = value - whole;
}

EchoFactor EchoFactor::from_parts(std::int64_t integer_part, double frac) {
  if (integer_part < 1 || !(frac >= 0.0 && frac < 1.0))
    throw std::invalid_argument("echo factor parts out of range");
  EchoFactor e;
  e.integer_part_ = integer_part;
  e.frac_ = frac;
  return e;
}

std::int64_t realized_repeats(const EchoFactor& e, Rng& rng) {
  if (e.is_integral()) return e.integer_part();
  return e.integer_part() + (unit_double(rng()) < e.frac() ? 1 : 0);
}

}  // namespace dataecho
