#include "steinmd/local_field.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>

#include "steinmd/errors.hpp"
#include "steinmd/rng.hpp"

namespace steinmd {
namespace {

std::vector<int> set_union(std::span<const int> a, std::span<const int> b) {
  std::vector<int> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::size_t at(int x) { return static_cast<std::size_t>(x); }

double abs_normal_moment(int p) {
  return std::pow(2.0, 0.5 * p) * std::tgamma(0.5 * (p + 1)) / std::sqrt(std::numbers::pi);
}

}  // namespace

DependencyStructure::DependencyStructure(std::vector<std::vector<int>> neighborhoods, int max_degree,
                                         std::string kind)
    : nbhd_(std::move(neighborhoods)), max_degree_(max_degree), kind_(std::move(kind)) {
  const int n = static_cast<int>(nbhd_.size());
  for (int i = 0; i < n; ++i) {
    auto& a = nbhd_[at(i)];
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    for (int j : a)
      if (j < 0 || j >= n) throw ValidationError("dependency structure: index out of range");
    if (!std::binary_search(a.begin(), a.end(), i))
      throw ValidationError("dependency structure: A_i must contain i (i = " + std::to_string(i) + ")");
  }
  for (int i = 0; i < n; ++i) {
    const auto& ai = nbhd_[at(i)];
    kappas_.k1 = std::max(kappas_.k1, static_cast<int>(ai.size()));
    for (int j : ai) {
      const auto aij = set_union(ai, nbhd_[at(j)]);
      kappas_.k2 = std::max(kappas_.k2, static_cast<int>(aij.size()));
      const int kij = kappa_pair(at(i), at(j));
      for (int k : aij) {
        const auto aijk = set_union(aij, nbhd_[at(k)]);
        kappas_.k3 = std::max(kappas_.k3, static_cast<int>(aijk.size()));
        kappas_.k4 = std::max(kappas_.k4, kij + kappa_triple(at(i), at(j), at(k)));
      }
    }
  }
}

std::vector<int> DependencyStructure::pair_neighborhood(std::size_t i, std::size_t j) const {
  return set_union(nbhd_[i], nbhd_[j]);
}

std::vector<int> DependencyStructure::triple_neighborhood(std::size_t i, std::size_t j,
                                                          std::size_t k) const {
  return set_union(pair_neighborhood(i, j), nbhd_[k]);
}

int DependencyStructure::kappa_pair(std::size_t i, std::size_t j) const {
  const auto aij = pair_neighborhood(i, j);
  const auto base = set_union(nbhd_[i], nbhd_[j]);
  return static_cast<int>(aij.size() - base.size());
}

int DependencyStructure::kappa_triple(std::size_t i, std::size_t j, std::size_t k) const {
  const auto aijk = triple_neighborhood(i, j, k);
  const auto base = set_union(set_union(nbhd_[i], nbhd_[j]), nbhd_[k]);
  return static_cast<int>(aijk.size() - base.size());
}

nlohmann::json DependencyStructure::to_json() const {
  return {{"kind", kind_},
          {"n", n()},
          {"kappa1", kappas_.k1},
          {"kappa2", kappas_.k2},
          {"kappa3", kappas_.k3},
          {"kappa4", kappas_.k4},
          {"max_degree", max_degree_}};
}

DependencyStructure build_structure_m_dependent(int n, int m) {
  if (m < 0) throw ValidationError("m-dependent structure: m must be nonnegative");
  if (n < 2 * m + 1) throw ValidationError("m-dependent structure: need n >= 2m + 1");
  std::vector<std::vector<int>> a(at(n));
  for (int i = 0; i < n; ++i)
    for (int j = std::max(0, i - m); j <= std::min(n - 1, i + m); ++j) a[at(i)].push_back(j);
  int max_size = 0;
  for (const auto& ai : a) max_size = std::max(max_size, static_cast<int>(ai.size()));
  return DependencyStructure(std::move(a), max_size - 1, "m_dependent");
}

DependencyStructure build_structure_dependency_graph(const std::vector<std::vector<int>>& adjacency) {
  const int n = static_cast<int>(adjacency.size());
  std::vector<std::set<int>> sets(at(n));
  for (int i = 0; i < n; ++i)
    for (int j : adjacency[at(i)]) {
      if (j < 0 || j >= n) throw ValidationError("dependency graph: neighbour index out of range");
      if (j == i) throw ValidationError("dependency graph: self-loop at " + std::to_string(i));
      if (!sets[at(i)].insert(j).second)
        throw ValidationError("dependency graph: repeated edge " + std::to_string(i) + "-" + std::to_string(j));
    }
  int degree = 0;
  std::vector<std::vector<int>> a(at(n));
  for (int i = 0; i < n; ++i) {
    for (int j : sets[at(i)])
      if (!sets[at(j)].count(i))
        throw ValidationError("dependency graph: adjacency is not symmetric at " + std::to_string(i) +
                              "-" + std::to_string(j));
    degree = std::max(degree, static_cast<int>(sets[at(i)].size()));
    a[at(i)].assign(sets[at(i)].begin(), sets[at(i)].end());
    a[at(i)].push_back(i);
  }
  return DependencyStructure(std::move(a), degree, "graph");
}

namespace {

std::vector<std::vector<int>> cycle_adjacency(int n) {
  if (n < 3) throw ValidationError("cycle: need n >= 3");
  std::vector<std::vector<int>> adj(at(n));
  for (int i = 0; i < n; ++i) adj[at(i)] = {(i + n - 1) % n, (i + 1) % n};
  return adj;
}

std::vector<std::vector<int>> adjacency_from_json(const nlohmann::json& j) {
  if (j.value("kind", std::string("graph")) == "cycle") return cycle_adjacency(j.at("n").get<int>());
  return j.at("adjacency").get<std::vector<std::vector<int>>>();
}

}  // namespace

DependencyStructure structure_from_json(const nlohmann::json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "m_dependent") return build_structure_m_dependent(j.at("n").get<int>(), j.at("m").get<int>());
    if (kind == "graph" || kind == "cycle") return build_structure_dependency_graph(adjacency_from_json(j));
    throw ValidationError("structure: unknown kind '" + kind + "'");
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(std::string("structure: ") + ex.what());
  }
}

FieldGenerator FieldGenerator::iid(int n, BaseDistribution base) {
  if (n < 1) throw ValidationError("iid field: n must be positive");
  FieldGenerator g;
  g.kind_ = FieldKind::iid;
  g.base_ = base;
  g.n_ = n;
  g.sources_ = n;
  return g;
}

FieldGenerator FieldGenerator::moving_sum(int n, int m, BaseDistribution base) {
  if (n < 1 || m < 0) throw ValidationError("moving sum: need n >= 1 and m >= 0");
  FieldGenerator g;
  g.kind_ = FieldKind::m_dependent_moving_sum;
  g.base_ = base;
  g.n_ = n;
  g.m_ = m;
  g.sources_ = n + m;
  return g;
}

FieldGenerator FieldGenerator::neighbor_product(int source_vertices, std::vector<VertexPair> source_edges,
                                                BaseDistribution base) {
  if (source_edges.empty()) throw ValidationError("product field: source graph needs edges");
  std::set<VertexPair> seen;
  for (auto& [a, b] : source_edges) {
    if (a < 0 || b < 0 || a >= source_vertices || b >= source_vertices || a == b)
      throw ValidationError("product field: bad source edge");
    if (a > b) std::swap(a, b);
    if (!seen.insert({a, b}).second) throw ValidationError("product field: repeated source edge");
  }
  FieldGenerator g;
  g.kind_ = FieldKind::dependency_graph_product;
  g.base_ = base;
  g.n_ = static_cast<int>(source_edges.size());
  g.sources_ = source_vertices;
  g.source_edges_ = std::move(source_edges);
  return g;
}

FieldGenerator FieldGenerator::cycle_product(int n, BaseDistribution base) {
  std::vector<VertexPair> edges;
  for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
  return neighbor_product(n, std::move(edges), base);
}

std::vector<int> FieldGenerator::sources_of(std::size_t i) const {
  const int ii = static_cast<int>(i);
  switch (kind_) {
    case FieldKind::iid:
      return {ii};
    case FieldKind::m_dependent_moving_sum: {
      std::vector<int> out;
      for (int k = 0; k <= m_; ++k) out.push_back(ii + k);
      return out;
    }
    case FieldKind::dependency_graph_product:
      return {source_edges_[i].first, source_edges_[i].second};
  }
  return {};
}

double FieldGenerator::raw_coordinate(std::size_t i, std::span<const double> sources) const {
  switch (kind_) {
    case FieldKind::iid:
      return sources[i];
    case FieldKind::m_dependent_moving_sum: {
      double s = 0.0;
      for (int k = 0; k <= m_; ++k) s += sources[i + at(k)];
      return s;
    }
    case FieldKind::dependency_graph_product:
      return sources[at(source_edges_[i].first)] * sources[at(source_edges_[i].second)];
  }
  return 0.0;
}

double FieldGenerator::raw_sigma() const {
  switch (kind_) {
    case FieldKind::iid:
      return std::sqrt(static_cast<double>(n_));
    case FieldKind::m_dependent_moving_sum: {
      // Source s enters the coordinates i with s - m <= i <= s.
      double var = 0.0;
      for (int s = 0; s < sources_; ++s) {
        const double mult = std::min(s, n_ - 1) - std::max(0, s - m_) + 1;
        var += mult * mult;
      }
      return std::sqrt(var);
    }
    case FieldKind::dependency_graph_product:
      // Distinct edges give orthogonal products of unit-variance sources.
      return std::sqrt(static_cast<double>(n_));
  }
  return 0.0;
}

double FieldGenerator::bound() const {
  if (!bounded()) return std::numeric_limits<double>::infinity();
  const double raw = (kind_ == FieldKind::m_dependent_moving_sum) ? static_cast<double>(m_ + 1) : 1.0;
  return raw / raw_sigma();
}

std::vector<std::pair<double, double>> FieldGenerator::abs_support() const {
  if (!bounded()) throw CapabilityError("abs_support: only finite-support (Rademacher) bases");
  const double sigma = raw_sigma();
  if (kind_ != FieldKind::m_dependent_moving_sum) return {{1.0 / sigma, 1.0}};
  // Sum of w = m + 1 Rademacher signs equals w - 2k with probability C(w, k) / 2^w.
  const int w = m_ + 1;
  std::vector<std::pair<double, double>> law;
  for (int k = 0; k <= w; ++k) {
    const double value = std::abs(w - 2 * k) / sigma;
    const double prob = binomial_coefficient(w, k) / std::ldexp(1.0, w);
    auto it = std::find_if(law.begin(), law.end(), [&](const auto& e) { return e.first == value; });
    if (it == law.end())
      law.emplace_back(value, prob);
    else
      it->second += prob;
  }
  std::sort(law.begin(), law.end());
  return law;
}

double FieldGenerator::abs_moment(int p) const {
  if (bounded()) {
    double acc = 0.0;
    for (auto [v, pr] : abs_support()) acc += pr * std::pow(v, p);
    return acc;
  }
  const double sigma = raw_sigma();
  switch (kind_) {
    case FieldKind::iid:
      return abs_normal_moment(p) / std::pow(sigma, p);
    case FieldKind::m_dependent_moving_sum:
      return abs_normal_moment(p) * std::pow(std::sqrt(m_ + 1.0) / sigma, p);
    case FieldKind::dependency_graph_product: {
      const double a = abs_normal_moment(p);
      return a * a / std::pow(sigma, p);
    }
  }
  return 0.0;
}

DependencyStructure FieldGenerator::natural_structure() const {
  switch (kind_) {
    case FieldKind::iid:
      return build_structure_m_dependent(n_, 0);
    case FieldKind::m_dependent_moving_sum:
      return build_structure_m_dependent(n_, m_);
    case FieldKind::dependency_graph_product: {
      std::vector<std::vector<int>> by_vertex(at(sources_));
      for (int e = 0; e < n_; ++e) {
        by_vertex[at(source_edges_[at(e)].first)].push_back(e);
        by_vertex[at(source_edges_[at(e)].second)].push_back(e);
      }
      std::vector<std::vector<int>> adj(at(n_));
      for (int e = 0; e < n_; ++e) {
        std::set<int> nb;
        for (int v : {source_edges_[at(e)].first, source_edges_[at(e)].second})
          for (int f : by_vertex[at(v)])
            if (f != e) nb.insert(f);
        adj[at(e)].assign(nb.begin(), nb.end());
      }
      return build_structure_dependency_graph(adj);
    }
  }
  return {};
}

nlohmann::json FieldGenerator::to_json() const {
  static const char* kinds[] = {"iid", "m_dependent_moving_sum", "dependency_graph_product"};
  nlohmann::json j{{"kind", kinds[static_cast<int>(kind_)]},
                   {"base", base_ == BaseDistribution::rademacher ? "rademacher" : "gaussian"},
                   {"n", n_}};
  if (kind_ == FieldKind::m_dependent_moving_sum) j["m"] = m_;
  if (kind_ == FieldKind::dependency_graph_product) {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(sources_));
    for (auto [a, b] : source_edges_) {
      adj[at(a)].push_back(b);
      adj[at(b)].push_back(a);
    }
    j["source_graph"] = {{"kind", "graph"}, {"adjacency", adj}};
  }
  return j;
}

FieldGenerator generator_from_json(const nlohmann::json& j, const nlohmann::json& structure_hint) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    const std::string base_name = j.value("base", std::string("rademacher"));
    BaseDistribution base;
    if (base_name == "rademacher")
      base = BaseDistribution::rademacher;
    else if (base_name == "gaussian")
      base = BaseDistribution::gaussian;
    else
      throw ValidationError("generator: unknown base '" + base_name + "'");
    auto hinted = [&](const char* key) {
      if (j.contains(key)) return j.at(key).get<int>();
      if (structure_hint.is_object() && structure_hint.contains(key)) return structure_hint.at(key).get<int>();
      throw ValidationError(std::string("generator: missing '") + key + "'");
    };
    if (kind == "iid") return FieldGenerator::iid(hinted("n"), base);
    if (kind == "m_dependent_moving_sum") return FieldGenerator::moving_sum(hinted("n"), hinted("m"), base);
    if (kind == "dependency_graph_product") {
      const auto& g = j.at("source_graph");
      const auto adj = adjacency_from_json(g);
      std::vector<VertexPair> edges;
      for (int a = 0; a < static_cast<int>(adj.size()); ++a)
        for (int b : adj[at(a)])
          if (a < b) edges.emplace_back(a, b);
      if (g.value("kind", std::string()) == "cycle") return FieldGenerator::cycle_product(g.at("n").get<int>(), base);
      return FieldGenerator::neighbor_product(static_cast<int>(adj.size()), edges, base);
    }
    throw ValidationError("generator: unknown kind '" + kind + "'");
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(std::string("generator: ") + ex.what());
  }
}

void check_compatible(const FieldGenerator& gen, const DependencyStructure& s) {
  if (gen.n() != s.n())
    throw ValidationError("generator has " + std::to_string(gen.n()) + " coordinates, structure has " +
                          std::to_string(s.n()));
  std::vector<std::vector<int>> users(gen.source_count());
  for (std::size_t i = 0; i < gen.n(); ++i)
    for (int src : gen.sources_of(i)) users[at(src)].push_back(static_cast<int>(i));
  for (std::size_t i = 0; i < gen.n(); ++i) {
    const auto a = s.neighborhood(i);
    for (int src : gen.sources_of(i))
      for (int j : users[at(src)])
        if (!std::binary_search(a.begin(), a.end(), j))
          throw ValidationError("generator coordinates " + std::to_string(i) + " and " + std::to_string(j) +
                                " share a source but " + std::to_string(j) + " is not in A_" +
                                std::to_string(i));
  }
}

namespace {

double draw_source(Xoshiro256& gen, BaseDistribution base) {
  if (base == BaseDistribution::rademacher) return static_cast<double>(gen.rademacher());
  return standard_normal(gen);
}

}  // namespace

FieldRealization generate_field(const FieldGenerator& gen, const DependencyStructure& s,
                                std::uint64_t master_seed, std::uint64_t replication) {
  if (gen.n() != s.n()) throw ValidationError("generate_field: generator and structure sizes differ");
  auto rng = make_stream(master_seed, replication, StreamTag::field);
  FieldRealization f;
  f.sources.resize(gen.source_count());
  for (auto& x : f.sources) x = draw_source(rng, gen.base());
  f.sigma_raw = gen.raw_sigma();
  f.x.resize(gen.n());
  double w = 0.0;
  for (std::size_t i = 0; i < gen.n(); ++i) {
    f.x[i] = gen.raw_coordinate(i, f.sources) / f.sigma_raw;
    w += f.x[i];
  }
  f.w = w;
  if (gen.bounded()) {
    const double envelope = (s.kappas().k2 - 1) * gen.bound() * (1.0 + 1e-12);
    for (std::size_t i = 0; i < gen.n(); ++i) {
      double acc = 0.0;
      for (int j : s.neighborhood(i))
        if (at(j) != i) acc += std::abs(f.x[at(j)]);
      if (acc > envelope) throw std::logic_error("generate_field: neighbourhood envelope violated");
    }
  }
  return f;
}

double r_statistic(const DependencyStructure& s, std::span<const double> m4) {
  if (m4.size() != s.n()) throw ValidationError("r_statistic: need one fourth moment per index");
  for (double x : m4)
    if (x < 0.0) throw DomainError("r_statistic: negative moment");
  // Inner sum over j' in A_{i'}: |A_{i'}| (m_i + m_j + m_{i'}) + sum_{j'} m_{j'}.
  std::vector<double> nb_sum(s.n(), 0.0);
  for (std::size_t i = 0; i < s.n(); ++i)
    for (int j : s.neighborhood(i)) nb_sum[i] += m4[at(j)];
  double r = 0.0;
  for (std::size_t i = 0; i < s.n(); ++i)
    for (int j : s.neighborhood(i))
      for (int ip : s.pair_neighborhood(i, at(j))) {
        const double size = static_cast<double>(s.neighborhood(at(ip)).size());
        r += size * (m4[i] + m4[at(j)] + m4[at(ip)]) + nb_sum[at(ip)];
      }
  return r;
}

GammaMoments gamma_from_support(std::vector<std::pair<double, double>> abs_law, double envelope) {
  return [law = std::move(abs_law), envelope](int p, std::size_t, double t) {
    double acc = 0.0;
    for (auto [v, pr] : law) acc += pr * std::pow(v, p) * std::exp(t * (envelope + v));
    return acc;
  };
}

GammaMoments gamma_from_tables(std::vector<MonotoneTable> g3, std::vector<MonotoneTable> g4,
                               std::vector<MonotoneTable> g6) {
  if (g3.empty() || g4.empty() || g6.empty()) throw ValidationError("gamma tables: empty table set");
  return [g3 = std::move(g3), g4 = std::move(g4), g6 = std::move(g6)](int p, std::size_t i, double t) {
    const auto& set = (p == 3) ? g3 : (p == 4) ? g4 : g6;
    const auto& table = set.size() == 1 ? set.front() : set.at(i);
    return table(t);
  };
}

GammaValues gamma_functionals(const DependencyStructure& s, const GammaMoments& gammas, double beta,
                              double t, double alpha) {
  if (t < 0.0 || t > alpha) throw RangeError("gamma_functionals: t must lie in [0, alpha]");
  if (!(beta >= 1.0)) throw DomainError("gamma_functionals: beta must be >= 1");
  const std::size_t n = s.n();
  std::vector<double> g3(n), g4(n), g6(n);
  for (std::size_t i = 0; i < n; ++i) {
    g3[i] = gammas(3, i, t);
    g4[i] = gammas(4, i, t);
    g6[i] = gammas(6, i, t);
  }
  std::vector<double> g4_nb(n, 0.0);
  double pairs_total = 0.0, g6_pairs = 0.0;  // sums over all (i', j' in A_i')
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = s.neighborhood(i);
    for (int j : a) {
      g4_nb[i] += g4[at(j)];
      g6_pairs += g6[i] + g6[at(j)];
    }
    pairs_total += static_cast<double>(a.size());
  }

  GammaValues out;
  out.t = t;
  out.beta = beta;
  for (std::size_t i = 0; i < n; ++i)
    for (int j : s.neighborhood(i)) {
      const auto aij = s.pair_neighborhood(i, at(j));
      const int kij = s.kappa_pair(i, at(j));
      const double inv_size = 1.0 / static_cast<double>(aij.size());
      for (int k : aij) {
        const int kijk = s.kappa_triple(i, at(j), at(k));
        const double w36 = std::pow(beta, 2 * kijk + 2 * kij);
        out.gamma3 += w36 * (g3[i] + g3[at(j)] + g3[at(k)]);
        const auto aijk = s.triple_neighborhood(i, at(j), at(k));
        const double w4 = inv_size * std::pow(beta, 2 * kij);
        for (int ip : aijk) {
          const double size = static_cast<double>(s.neighborhood(at(ip)).size());
          out.gamma4 += w4 * (size * (g4[i] + g4[at(j)] + g4[at(ip)]) + g4_nb[at(ip)]);
        }
        for (int l : aijk)
          out.gamma6 += w36 * (pairs_total * (g6[i] + g6[at(j)] + g6[at(k)] + g6[at(l)]) + g6_pairs);
      }
    }
  return out;
}

LocalCalibration calibrate_bounded(const DependencyStructure& s, double delta, EnvelopeRule rule) {
  if (!(delta > 0.0)) throw DomainError("calibrate_bounded: delta must be positive");
  const Kappas& k = s.kappas();
  LocalCalibration c;
  c.envelope = ((rule == EnvelopeRule::quoted ? k.k2 : k.k1) - 1) * delta;
  c.alpha = 1.0 / (delta * k.k1 * (1.0 + k.k4));
  c.beta = std::exp(1.0 / (1.0 + k.k4));
  return c;
}

namespace {

// Recomputes the coordinates of A_i from `sources`; returns sum over A_i of
// (old - new) and X_i - X_i^{(i)}.
std::pair<double, double> neighbourhood_change(const FieldRealization& f, const FieldGenerator& gen,
                                               const DependencyStructure& s, std::size_t i,
                                               std::span<const double> sources) {
  double delta = 0.0, d = 0.0;
  for (int j : s.neighborhood(i)) {
    const double fresh = gen.raw_coordinate(at(j), sources) / f.sigma_raw;
    const double diff = f.x[at(j)] - fresh;
    delta += diff;
    if (at(j) == i) d = diff;
  }
  return {delta, d};
}

}  // namespace

PairDraw draw_exchangeable_pair_local(const FieldRealization& field, const FieldGenerator& gen,
                                      const DependencyStructure& s, std::uint64_t pair_seed) {
  if (!gen.supports_conditional_resample())
    throw CapabilityError("draw_exchangeable_pair_local: generator cannot resample a coordinate");
  Xoshiro256 rng(pair_seed);
  const std::size_t chosen = static_cast<std::size_t>(rng.below(s.n()));
  std::vector<double> sources = field.sources;
  for (int src : gen.sources_of(chosen)) sources[at(src)] = draw_source(rng, gen.base());
  const auto [delta, d] = neighbourhood_change(field, gen, s, chosen, sources);
  PairDraw draw;
  draw.chosen = chosen;
  draw.w = field.w;
  draw.w_prime = field.w - delta;
  draw.delta = field.w - draw.w_prime;
  draw.d = d;
  return draw;
}

DriftTerms local_drift_terms(const FieldRealization& field, const FieldGenerator& gen,
                             const DependencyStructure& s) {
  if (!gen.bounded()) throw CapabilityError("local_drift_terms: needs a finite-support base");
  const std::size_t n = s.n();
  std::vector<double> sources = field.sources;
  double dd = 0.0, absd = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto mine = gen.sources_of(i);
    const std::size_t configs = std::size_t{1} << mine.size();
    const double weight = 1.0 / static_cast<double>(configs);
    for (std::size_t c = 0; c < configs; ++c) {
      for (std::size_t k = 0; k < mine.size(); ++k) sources[at(mine[k])] = (c >> k & 1U) ? 1.0 : -1.0;
      const auto [delta, d] = neighbourhood_change(field, gen, s, i, sources);
      dd += weight * d * delta;
      absd += weight * std::abs(d) * delta;
    }
    for (int src : mine) sources[at(src)] = field.sources[at(src)];
  }
  // lambda = 1/n and E[. | X] averages over the uniform index: the n cancels.
  return {0.5 * dd - 1.0, absd};
}

LocalExperiment::LocalExperiment(FieldGenerator gen, DependencyStructure structure, std::uint64_t master_seed)
    : gen_(std::move(gen)), s_(std::move(structure)), seed_(master_seed) {
  check_compatible(gen_, s_);
}

FieldRealization LocalExperiment::field(std::uint64_t replication) const {
  return generate_field(gen_, s_, seed_, replication);
}

PairDraw LocalExperiment::draw_pair(std::uint64_t replication) const {
  return draw_exchangeable_pair_local(field(replication), gen_, s_,
                                      mix_key(seed_, replication, static_cast<std::uint64_t>(StreamTag::pair_local)));
}

DriftTerms LocalExperiment::drift_terms(std::uint64_t replication) const {
  return local_drift_terms(field(replication), gen_, s_);
}

std::vector<double> LocalExperiment::fourth_moments() const {
  return std::vector<double>(s_.n(), gen_.abs_moment(4));
}

double LocalExperiment::r() const { return r_statistic(s_, fourth_moments()); }

}  // namespace steinmd
