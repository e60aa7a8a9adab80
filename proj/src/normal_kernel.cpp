#include "steinmd/normal_kernel.hpp"

#include <cmath>
#include <string>

#include "steinmd/errors.hpp"

namespace steinmd {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw DomainError(std::string(what) + ": non-finite argument");
}

// Continued fraction 1/(x+1/(x+2/(x+3/(x+...)))) evaluated backwards; accurate
// to double precision for x >= 6 with 200 levels.
double mills_continued_fraction(double x) {
  double t = x;
  for (int k = 200; k >= 1; --k) t = x + k / t;
  return 1.0 / t;
}

}  // namespace

double std_normal_pdf(double z) {
  require_finite(z, "std_normal_pdf");
  return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

double std_normal_cdf(double z) {
  require_finite(z, "std_normal_cdf");
  return 0.5 * std::erfc(-z * kInvSqrt2);
}

double std_normal_tail(double z) {
  require_finite(z, "std_normal_tail");
  return 0.5 * std::erfc(z * kInvSqrt2);
}

NormalEval normal_eval(double z) {
  return {z, std_normal_cdf(z), std_normal_tail(z), std_normal_pdf(z)};
}

double mills_ratio(double x) {
  require_finite(x, "mills_ratio");
  if (x < 0.0) throw DomainError("mills_ratio: negative argument");
  if (x < 6.0) return std_normal_tail(x) / std_normal_pdf(x);
  return mills_continued_fraction(x);
}

MillsCheck mills_check(double z) {
  require_finite(z, "mills_check");
  if (z <= 0.0) throw DomainError("mills_check: z must be positive");
  return {std::exp(-0.5 * z * z), kSqrt2Pi * (1.0 + z) * std_normal_tail(z)};
}

SteinSolutionPoint stein_solution(double z, double w) {
  require_finite(z, "stein_solution");
  require_finite(w, "stein_solution");
  const double phi_z = std_normal_cdf(z);
  double f = 0.0;
  // Each branch is arranged so that no intermediate overflows: ratios of
  // normal probabilities to the density go through the Mills ratio, and the
  // remaining exponential factor has a nonpositive exponent.
  if (w <= z) {
    if (w < 0.0) {
      f = mills_ratio(-w) * std_normal_tail(z);
    } else {
      f = std_normal_cdf(w) * mills_ratio(z) * std::exp(0.5 * (w * w - z * z));
    }
  } else {
    if (w >= 0.0) {
      f = phi_z * mills_ratio(w);
    } else {
      f = mills_ratio(-z) * std_normal_tail(w) * std::exp(0.5 * (w * w - z * z));
    }
  }
  const double indicator = (w <= z) ? 1.0 : 0.0;
  const double fprime = w * f + indicator - phi_z;
  return {z, w, f, fprime, std::fabs(w) > kSteinSaturation};
}

}  // namespace steinmd
