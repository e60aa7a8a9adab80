#include "steinmd/oracle.hpp"

#include <bit>
#include <cmath>
#include <vector>

#include "steinmd/errors.hpp"

namespace steinmd {

nlohmann::json ExhaustiveResult::to_json() const {
  nlohmann::json j{{"N", N}, {"p", p}, {"graphs", graphs}, {"copies", copies}, {"mean", mean}, {"variance", variance}};
  if (drift_checked)
    j["drift"] = {{"max_abs_E[D|X]-lambda_W", drift_max_residual}, {"E[D_Delta]", e_d_delta}, {"two_lambda", two_lambda}};
  return j;
}

ExhaustiveResult exhaustive_moments(int N, double p, const PatternGraph& g, bool with_drift) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("oracle: p must lie in (0, 1)");
  if (N < g.vertex_count()) throw DomainError("oracle: N smaller than the pattern");
  const int limit = with_drift ? kOracleMaxDriftN : kOracleMaxN;
  if (N > limit) throw ResourceError("oracle: N = " + std::to_string(N) + " exceeds " + std::to_string(limit));

  const int edges = N * (N - 1) / 2;
  const auto copies = enumerate_copies(N, g);
  std::vector<std::uint32_t> masks;
  for (const auto& c : copies) {
    std::uint32_t m = 0;
    for (auto id : c.edge_ids) m |= 1U << id;
    masks.push_back(m);
  }
  const int e = g.edge_count();
  const std::uint32_t total = 1U << edges;

  // First pass: exact mean and variance of S.
  std::vector<double> graph_prob(static_cast<std::size_t>(edges) + 1);
  for (int k = 0; k <= edges; ++k)
    graph_prob[static_cast<std::size_t>(k)] = std::pow(p, k) * std::pow(1.0 - p, edges - k);
  double m1 = 0.0, m2 = 0.0;
  for (std::uint32_t x = 0; x < total; ++x) {
    double s = 0.0;
    for (auto m : masks) s += (x & m) == m;
    const double w = graph_prob[static_cast<std::size_t>(std::popcount(x))];
    m1 += w * s;
    m2 += w * s * s;
  }
  ExhaustiveResult r;
  r.N = N;
  r.p = p;
  r.graphs = total;
  r.copies = static_cast<double>(masks.size());
  r.mean = m1;
  r.variance = m2 - m1 * m1;
  if (!with_drift) return r;

  // Second pass: the pair that redraws the e edges of a uniform copy I.
  const double sigma = std::sqrt(r.variance);
  const double lambda = 1.0 / r.copies;
  const std::uint32_t configs = 1U << e;
  std::vector<double> cfg_prob(configs);
  for (std::uint32_t y = 0; y < configs; ++y)
    cfg_prob[y] = std::pow(p, std::popcount(y)) * std::pow(1.0 - p, e - std::popcount(y));
  double e_dd = 0.0, worst = 0.0;
  for (std::uint32_t x = 0; x < total; ++x) {
    double s = 0.0;
    for (auto m : masks) s += (x & m) == m;
    const double w = (s - r.mean) / sigma;
    double ed = 0.0, edd = 0.0;
    for (auto mi : masks) {
      std::vector<int> bits;
      for (int b = 0; b < edges; ++b)
        if (mi >> b & 1U) bits.push_back(b);
      for (std::uint32_t y = 0; y < configs; ++y) {
        std::uint32_t xp = x & ~mi;
        for (int k = 0; k < e; ++k)
          if (y >> k & 1U) xp |= 1U << bits[static_cast<std::size_t>(k)];
        double sp = 0.0;
        for (auto m : masks) sp += (xp & m) == m;
        const double d = (static_cast<double>((x & mi) == mi) - static_cast<double>((xp & mi) == mi)) / sigma;
        const double delta = (s - sp) / sigma;
        ed += cfg_prob[y] * d;
        edd += cfg_prob[y] * d * delta;
      }
    }
    ed *= lambda;
    edd *= lambda;
    worst = std::max(worst, std::abs(ed - lambda * w));
    e_dd += graph_prob[static_cast<std::size_t>(std::popcount(x))] * edd;
  }
  r.drift_checked = true;
  r.drift_max_residual = worst;
  r.e_d_delta = e_dd;
  r.two_lambda = 2.0 * lambda;
  return r;
}

}  // namespace steinmd
