#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "steinmd/graph_model.hpp"
#include "steinmd/local_field.hpp"
#include "steinmd/monotone_table.hpp"

namespace steinmd {

// Nondecreasing envelopes delta_1, delta_2, delta_3 on [0, A].
struct DeltaEnvelope {
  double A = 0.0;
  MonotoneTable d1;
  MonotoneTable d2;
  MonotoneTable d3;

  // Throws ValidationError unless A > 0, values are nonnegative and every
  // table covers [0, A].
  DeltaEnvelope(double a, MonotoneTable t1, MonotoneTable t2, MonotoneTable t3);
  static DeltaEnvelope constant(double a, double c1, double c2, double c3);

  // (t^2 / 2)(delta_1 + delta_2) + delta_3 t
  double penalty(double t) const;
};

struct BoundReport {
  double bound = 0.0;
  bool valid = true;
  std::string reason;
  double z = 0.0;
  bool rate_only = false;
  std::optional<std::string> regime;
  nlohmann::json inputs = nlohmann::json::object();
  nlohmann::json details = nlohmann::json::object();

  nlohmann::json to_json() const;
};

// Largest t in [0, A] with penalty(t) <= d0, by bisection to 1e-12 A.
double a0_search(const DeltaEnvelope& env, double d0);

// 20 e^{d0} ((1 + z^2)(delta_1(z) + delta_2(z)) + (1 + z) delta_3(z)), valid
// for z <= A0(d0).
BoundReport md_exchangeable(const DeltaEnvelope& env, double d0, double z);

// E|1 - E[D Delta|W]/(2 lambda)| + E|E[D* Delta|W]|/lambda + E|R|.
double be_exchangeable(double term1, double term2, double term3);

// Which branch p = 1/2 belongs to in the small-p / large-p split.
enum class HalfRule { inclusive, exclusive };

// Kolmogorov rate and the moderate-deviation error (1 + z^2) b_N(p, z) for a
// subgraph count, constants set to 1.
BoundReport subgraph_bounds(int N, double p, const PatternGraph& g, double z,
                            HalfRule rule = HalfRule::inclusive);

// Four-regime classification of the triangle case.
BoundReport triangle_regimes(int N, double p, double z);

// 12 sqrt(r).
double local_be(double r);

// 240 e^{d0} (1 + z^2) E(z), E(z) = beta^{5/2} G4^{1/2} + beta^6 G3 z + beta^3 G6^{1/2} z,
// valid for z <= alpha and E(z) z^2 <= 2 d0. `gammas` must be evaluated at z.
BoundReport local_md(const GammaValues& gammas, double beta, double z, double d0, double alpha);

// Rate for |X_i| <= delta with kappa constants (C = 1).
BoundReport bounded_local_md(int n, double delta, const Kappas& kappas, double z);

// Dependency-graph rates with |X_i| <= B (C = 1). `bound` is the moderate
// deviation error; details carry the Kolmogorov rate.
BoundReport depgraph_bounds(double B, double sigma, int n, int max_degree, double z);

struct MgfBound {
  double raw = 0.0;
  double simplified = 0.0;
  bool simplified_valid = false;
};

// exp{(t^2/2)(1 + delta_1 + delta_2) + delta_3 t} and e^{d0 + t^2/2}.
MgfBound mgf_bound(const DeltaEnvelope& env, double t, double d0);

}  // namespace steinmd
