#include "steinmd/monotone_table.hpp"

#include <algorithm>
#include <cmath>

#include "steinmd/errors.hpp"

namespace steinmd {

MonotoneTable::MonotoneTable(std::vector<double> knots, std::vector<double> values,
                             double tolerance)
    : knots_(std::move(knots)), values_(std::move(values)) {
  if (knots_.empty() || knots_.size() != values_.size())
    throw ValidationError("monotone table: knots and values must be nonempty and equal length");
  for (std::size_t k = 0; k < knots_.size(); ++k) {
    if (!std::isfinite(knots_[k]) || !std::isfinite(values_[k]))
      throw ValidationError("monotone table: non-finite entry");
    if (k > 0 && !(knots_[k] > knots_[k - 1]))
      throw ValidationError("monotone table: knots must be strictly increasing");
    if (k > 0 && values_[k] < values_[k - 1] - tolerance)
      throw ValidationError("monotone table: values must be nondecreasing");
  }
  // Absorb tolerated dips so evaluation is exactly monotone.
  for (std::size_t k = 1; k < values_.size(); ++k) values_[k] = std::max(values_[k], values_[k - 1]);
}

MonotoneTable MonotoneTable::constant(double value, double upper) {
  if (!(upper > 0.0)) return MonotoneTable({0.0}, {value});
  return MonotoneTable({0.0, upper}, {value, value});
}

MonotoneTable MonotoneTable::linear(double intercept, double slope, double upper) {
  if (slope < 0.0) throw ValidationError("monotone table: negative slope");
  if (!(upper > 0.0)) return MonotoneTable({0.0}, {intercept});
  return MonotoneTable({0.0, upper}, {intercept, intercept + slope * upper});
}

double MonotoneTable::operator()(double t) const {
  if (knots_.empty()) throw ValidationError("monotone table: empty");
  if (t <= knots_.front()) return values_.front();
  if (t >= knots_.back()) return values_.back();
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  const auto hi = static_cast<std::size_t>(it - knots_.begin());
  const std::size_t lo = hi - 1;
  const double frac = (t - knots_[lo]) / (knots_[hi] - knots_[lo]);
  return values_[lo] + frac * (values_[hi] - values_[lo]);
}

}  // namespace steinmd
