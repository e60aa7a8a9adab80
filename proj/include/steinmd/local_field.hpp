#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "steinmd/er_process.hpp"
#include "steinmd/monotone_table.hpp"
#include "steinmd/pair_draw.hpp"

namespace steinmd {

struct Kappas {
  int k1 = 0;  // max |A_i|
  int k2 = 0;  // max |A_ij|
  int k3 = 0;  // max |A_ijk|
  int k4 = 0;  // max (kappa_ij + kappa_ijk)
};

// Index set {0..n-1} with neighbourhoods A_i (always containing i). Pair and
// triple neighbourhoods follow the union rule A_ij = A_i u A_j and
// A_ijk = A_i u A_j u A_k, which satisfies the nesting A_i c A_ij c A_ijk.
class DependencyStructure {
 public:
  DependencyStructure() = default;
  // Neighbourhoods are sorted and deduplicated; throws ValidationError when
  // some i is missing from A_i or an index is out of range.
  DependencyStructure(std::vector<std::vector<int>> neighborhoods, int max_degree, std::string kind);

  std::size_t n() const { return nbhd_.size(); }
  std::span<const int> neighborhood(std::size_t i) const { return nbhd_[i]; }
  std::vector<int> pair_neighborhood(std::size_t i, std::size_t j) const;
  std::vector<int> triple_neighborhood(std::size_t i, std::size_t j, std::size_t k) const;
  int kappa_pair(std::size_t i, std::size_t j) const;
  int kappa_triple(std::size_t i, std::size_t j, std::size_t k) const;
  const Kappas& kappas() const { return kappas_; }
  // D(G) for dependency graphs; max |A_i| - 1 otherwise.
  int max_degree() const { return max_degree_; }
  const std::string& kind() const { return kind_; }
  nlohmann::json to_json() const;

 private:
  std::vector<std::vector<int>> nbhd_;
  Kappas kappas_;
  int max_degree_ = 0;
  std::string kind_;
};

// A_i = {i-m, ..., i+m} clipped to the index set. Requires n >= 2m + 1, m >= 0.
DependencyStructure build_structure_m_dependent(int n, int m);
// A_i = neighbours(i) u {i}. Throws ValidationError for asymmetric adjacency
// (directed input), repeated neighbours, or self-loops.
DependencyStructure build_structure_dependency_graph(const std::vector<std::vector<int>>& adjacency);
// {"kind":"m_dependent","n":..,"m":..}, {"kind":"graph","adjacency":[[..],..]}
// or {"kind":"cycle","n":..}.
DependencyStructure structure_from_json(const nlohmann::json& j);

enum class FieldKind { iid, m_dependent_moving_sum, dependency_graph_product };
enum class BaseDistribution { rademacher, gaussian };

// Built-in centred random fields driven by iid unit-variance sources.
//   iid:          X_i = xi_i
//   moving sum:   X_i = xi_i + ... + xi_{i+m}          (m-dependent)
//   product:      X_e = xi_a xi_b for each edge e = ab of a source graph;
//                 the dependency graph is the line graph of the source graph
// All are divided by the exact sd of their sum so that Var(W) = 1.
class FieldGenerator {
 public:
  static FieldGenerator iid(int n, BaseDistribution base = BaseDistribution::rademacher);
  static FieldGenerator moving_sum(int n, int m, BaseDistribution base = BaseDistribution::rademacher);
  static FieldGenerator neighbor_product(int source_vertices, std::vector<VertexPair> source_edges,
                                         BaseDistribution base = BaseDistribution::rademacher);
  static FieldGenerator cycle_product(int n, BaseDistribution base = BaseDistribution::rademacher);

  FieldKind kind() const { return kind_; }
  BaseDistribution base() const { return base_; }
  std::size_t n() const { return static_cast<std::size_t>(n_); }
  int window() const { return m_; }
  std::size_t source_count() const { return static_cast<std::size_t>(sources_); }
  std::vector<int> sources_of(std::size_t i) const;
  double raw_coordinate(std::size_t i, std::span<const double> sources) const;

  // sd of the raw sum, in closed form.
  double raw_sigma() const;
  bool bounded() const { return base_ == BaseDistribution::rademacher; }
  // Uniform bound delta on |X_i| after normalisation (infinity if unbounded).
  double bound() const;
  // Law of |X_i| after normalisation as (value, probability); identical for
  // every i. CapabilityError for continuous bases.
  std::vector<std::pair<double, double>> abs_support() const;
  // E|X_i|^p after normalisation.
  double abs_moment(int p) const;
  bool supports_conditional_resample() const { return true; }

  DependencyStructure natural_structure() const;
  nlohmann::json to_json() const;

 private:
  FieldKind kind_ = FieldKind::iid;
  BaseDistribution base_ = BaseDistribution::rademacher;
  int n_ = 0;
  int m_ = 0;
  int sources_ = 0;
  std::vector<VertexPair> source_edges_;
};

// {"kind":"iid"|"m_dependent_moving_sum"|"dependency_graph_product",
//  "base":"rademacher"|"gaussian", "n":.., "m":.., "source_graph":{...}}
FieldGenerator generator_from_json(const nlohmann::json& j, const nlohmann::json& structure_hint = {});

// Throws ValidationError unless every coordinate sharing a source with i lies
// in A_i (which is what makes (LD1) hold for the built-in fields).
void check_compatible(const FieldGenerator& gen, const DependencyStructure& s);

struct FieldRealization {
  std::vector<double> sources;
  std::vector<double> x;  // normalised, sum has unit variance
  double w = 0.0;
  double sigma_raw = 0.0;
};

// Pure function of (master_seed, replication). For bounded generators the
// pathwise envelope sum_{j in A_i, j != i} |X_j| <= (kappa_2 - 1) delta is
// asserted on every sample.
FieldRealization generate_field(const FieldGenerator& gen, const DependencyStructure& s,
                                std::uint64_t master_seed, std::uint64_t replication);

// Quadruple neighbourhood sum of fourth moments driving the 12 sqrt(r) bound.
double r_statistic(const DependencyStructure& s, std::span<const double> fourth_moments);

// gamma_{p,i}(t) = E |X_i|^p exp(t (U_i + |X_i|)) for p in {3, 4, 6}.
using GammaMoments = std::function<double(int p, std::size_t i, double t)>;

// Closed form from a finite law of |X_i| and a constant envelope U.
GammaMoments gamma_from_support(std::vector<std::pair<double, double>> abs_law, double envelope);
// Monotone piecewise-linear tables, one per p; each vector holds either one
// table shared by all indices or one table per index.
GammaMoments gamma_from_tables(std::vector<MonotoneTable> g3, std::vector<MonotoneTable> g4,
                               std::vector<MonotoneTable> g6);

struct GammaValues {
  double t = 0.0;
  double gamma3 = 0.0;
  double gamma4 = 0.0;
  double gamma6 = 0.0;
  double beta = 1.0;
};

// Gamma_3, Gamma_4, Gamma_6 at t. The (i', j') sums of Gamma_6 run over the
// whole index set as written; they are factored out so the cost stays linear
// in n. Throws RangeError for t outside [0, alpha], DomainError for beta < 1.
GammaValues gamma_functionals(const DependencyStructure& s, const GammaMoments& gammas, double beta,
                              double t, double alpha);

// Which envelope U_i to use when |X_i| <= delta.
enum class EnvelopeRule {
  quoted,  // U_i = (kappa_2 - 1) delta
  tight,   // U_i = (kappa_1 - 1) delta; with it E exp(alpha(|X_i| + U_i)) <= beta
};

struct LocalCalibration {
  double envelope = 0.0;  // U_i
  double alpha = 0.0;
  double beta = 1.0;
};

// alpha = 1 / (delta kappa_1 (1 + kappa_4)), beta = e^{1/(1 + kappa_4)}.
LocalCalibration calibrate_bounded(const DependencyStructure& s, double delta,
                                   EnvelopeRule rule = EnvelopeRule::quoted);

// Resample the sources of a uniform coordinate I (X_I^{(I)} is then an
// independent copy of X_I) and recompute the coordinates in A_I.
PairDraw draw_exchangeable_pair_local(const FieldRealization& field, const FieldGenerator& gen,
                                      const DependencyStructure& s, std::uint64_t pair_seed);

// s1 = (1/(2 lambda)) E[D Delta | X] - 1 and s2 = (1/lambda) E[|D| Delta | X],
// by exact enumeration of the resampled sources (Rademacher bases only).
DriftTerms local_drift_terms(const FieldRealization& field, const FieldGenerator& gen,
                             const DependencyStructure& s);

class LocalExperiment {
 public:
  LocalExperiment(FieldGenerator gen, DependencyStructure structure, std::uint64_t master_seed);

  const FieldGenerator& generator() const { return gen_; }
  const DependencyStructure& structure() const { return s_; }
  std::uint64_t master_seed() const { return seed_; }
  double lambda() const { return 1.0 / static_cast<double>(s_.n()); }

  FieldRealization field(std::uint64_t replication) const;
  double w(std::uint64_t replication) const { return field(replication).w; }
  PairDraw draw_pair(std::uint64_t replication) const;
  DriftTerms drift_terms(std::uint64_t replication) const;
  std::vector<double> fourth_moments() const;
  double r() const;

 private:
  FieldGenerator gen_;
  DependencyStructure s_;
  std::uint64_t seed_;
};

}  // namespace steinmd
