#pragma once

#include <cstdint>

#include <json.hpp>

#include "steinmd/graph_model.hpp"

namespace steinmd {

inline constexpr int kOracleMaxN = 7;
inline constexpr int kOracleMaxDriftN = 6;

// Moments of the copy count by summing over all 2^{C(N,2)} labelled graphs.
// With `with_drift`, also evaluates the single-copy resampling pair exactly:
// the largest |E[D | X] - lambda W| over graphs and E[D Delta], which must be
// 0 and 2 lambda.
struct ExhaustiveResult {
  int N = 0;
  double p = 0.0;
  std::uint64_t graphs = 0;
  double copies = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  bool drift_checked = false;
  double drift_max_residual = 0.0;
  double e_d_delta = 0.0;
  double two_lambda = 0.0;

  nlohmann::json to_json() const;
};

// Throws ResourceError for N above kOracleMaxN (kOracleMaxDriftN with drift).
ExhaustiveResult exhaustive_moments(int N, double p, const PatternGraph& g, bool with_drift = false);

}  // namespace steinmd
