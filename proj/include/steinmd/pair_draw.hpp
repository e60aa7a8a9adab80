#pragma once

#include <cstddef>

namespace steinmd {

// One draw of an exchangeable pair (W, W') together with the antisymmetric
// D of condition (D1). `chosen` is the uniformly drawn index I (a copy index
// for subgraph counts, a coordinate for local fields).
struct PairDraw {
  double w = 0.0;
  double w_prime = 0.0;
  double d = 0.0;
  double delta = 0.0;  // w - w_prime
  std::size_t chosen = 0;
};

}  // namespace steinmd
