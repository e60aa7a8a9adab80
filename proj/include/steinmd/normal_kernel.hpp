#pragma once

namespace steinmd {

inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
inline constexpr double kSqrt2Pi = 2.50662827463100050242;

struct NormalEval {
  double z;
  double cdf;
  double tail;
  double density;
};

// Value of the bounded solution f_z of f'(w) - w f(w) = 1{w <= z} - Phi(z)
// and its derivative at w. `saturated` is set when |w| exceeds the range in
// which e^{w^2/2} is representable and the asymptotic Mills ratio was used.
struct SteinSolutionPoint {
  double z;
  double w;
  double f;
  double fprime;
  bool saturated;
};

struct MillsCheck {
  double lhs;  // e^{-z^2/2}
  double rhs;  // sqrt(2 pi) (1 + z) (1 - Phi(z))
};

inline constexpr double kSteinSaturation = 38.0;

double std_normal_pdf(double z);
double std_normal_cdf(double z);
// 1 - Phi(z) evaluated through erfc, never by subtraction.
double std_normal_tail(double z);
NormalEval normal_eval(double z);

// (1 - Phi(x)) / phi(x), stable for all x >= 0.
double mills_ratio(double x);

MillsCheck mills_check(double z);

SteinSolutionPoint stein_solution(double z, double w);

}  // namespace steinmd
