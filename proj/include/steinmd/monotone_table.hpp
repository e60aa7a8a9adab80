#pragma once

#include <span>
#include <utility>
#include <vector>

namespace steinmd {

// Nondecreasing piecewise-linear function given by knots (t_k, v_k) with
// strictly increasing t_k. Evaluation outside the knot range clamps to the
// end values.
class MonotoneTable {
 public:
  MonotoneTable() = default;
  // Throws ValidationError on unsorted knots, non-finite values, or a decrease
  // larger than `tolerance` between consecutive knots.
  MonotoneTable(std::vector<double> knots, std::vector<double> values, double tolerance = 1e-12);

  static MonotoneTable constant(double value, double upper);
  // a + b t on [0, upper], b >= 0.
  static MonotoneTable linear(double intercept, double slope, double upper);

  double operator()(double t) const;

  double lower() const { return knots_.front(); }
  double upper() const { return knots_.back(); }
  std::span<const double> knots() const { return knots_; }
  std::span<const double> values() const { return values_; }
  bool empty() const { return knots_.empty(); }

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
};

}  // namespace steinmd
