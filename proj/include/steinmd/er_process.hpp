#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "steinmd/graph_model.hpp"
#include "steinmd/pair_draw.hpp"

namespace steinmd {

inline constexpr double kMinEdgeProbability = 1e-12;
inline constexpr std::uint64_t kDefaultPairTermCap = 100'000'000;

// p clamped to [1e-12, 1 - 1e-12]; `clamped` reports whether it moved.
double clamp_probability(double p, bool* clamped = nullptr);

// A realisation of G(N, p). Edge indicators are kept twice: packed by K_N
// edge id, and as adjacency rows for neighbourhood intersections.
class ErSample {
 public:
  explicit ErSample(int N, std::uint64_t seed_tag = 0);
  static ErSample complete(int N);

  int N() const { return n_; }
  std::uint64_t seed_tag() const { return seed_tag_; }
  std::size_t edge_total() const { return edge_total_; }
  int words_per_row() const { return words_; }

  bool has_edge(int a, int b) const {
    return (rows_[static_cast<std::size_t>(a * words_ + (b >> 6))] >> (b & 63)) & 1U;
  }
  bool edge(std::size_t id) const { return (bits_[id >> 6] >> (id & 63)) & 1U; }
  void set_edge(int a, int b, bool on);

  std::span<const std::uint64_t> row(int a) const {
    return {rows_.data() + static_cast<std::size_t>(a * words_), static_cast<std::size_t>(words_)};
  }
  // Packed bits, bit k = indicator of K_N edge id k.
  std::span<const std::uint64_t> edge_bits() const { return bits_; }
  std::size_t edge_count() const;

  friend bool operator==(const ErSample& a, const ErSample& b) {
    return a.n_ == b.n_ && a.bits_ == b.bits_;
  }

 private:
  int n_;
  int words_;
  std::size_t edge_total_;
  std::uint64_t seed_tag_;
  std::vector<std::uint64_t> bits_;
  std::vector<std::uint64_t> rows_;
};

// Independent Bernoulli(p) edges; a pure function of (master_seed, replication).
ErSample sample_graph(int N, double p, std::uint64_t master_seed, std::uint64_t replication);

// Number of (not necessarily induced) copies of g present in the sample.
// Triangles use common-neighbourhood popcounts; other patterns count
// injective homomorphisms by backtracking and divide by |Aut(g)|.
std::uint64_t count_copies_in(const ErSample& sample, const PatternGraph& g);

// (count - mean) / sigma. Throws DegenerateError when sigma is zero.
double w_statistic(double count, const SubgraphMoments& moments);

// Copies of G in K_N with, for each copy i, the overlap list A_i of copies
// sharing at least one edge with i (i itself included).
class CopyTable {
 public:
  struct Neighbor {
    std::uint32_t copy;
    std::uint32_t shared_mask;  // bit k: the k-th edge of copy i is also in this copy
    std::uint32_t rest_offset;  // edges of this copy not in i
    std::uint32_t rest_count;
  };

  CopyTable(int N, const PatternGraph& g, std::uint64_t copy_cap = kDefaultCopyCap,
            std::uint64_t pair_cap = kDefaultPairTermCap);

  int N() const { return n_; }
  int edges_per_copy() const { return e_; }
  std::size_t size() const { return count_; }
  std::span<const std::uint32_t> edges(std::size_t i) const {
    return {edges_.data() + i * static_cast<std::size_t>(e_), static_cast<std::size_t>(e_)};
  }
  std::span<const Neighbor> neighbors(std::size_t i) const {
    return {neighbors_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::span<const std::uint32_t> rest_edges(const Neighbor& nb) const {
    return {rest_.data() + nb.rest_offset, nb.rest_count};
  }
  std::size_t pair_terms() const { return neighbors_.size(); }
  CopyIndex copy(std::size_t i) const;

  // Sum over copies of the product of their edge indicators.
  std::uint64_t count_present(const ErSample& sample) const;
  bool present(const ErSample& sample, std::size_t i) const;

 private:
  int n_;
  int e_;
  std::size_t count_;
  std::vector<std::uint32_t> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> neighbors_;
  std::vector<std::uint32_t> rest_;
};

// Single-copy edge resampling pair: I uniform over copies, the e edges of copy
// I redrawn from Bernoulli(p), every copy overlapping I recomputed with the
// redrawn indicators on shared edges. D = X_I - X_I^{(I)}.
PairDraw draw_exchangeable_pair(const ErSample& sample, const CopyTable& table,
                                const SubgraphMoments& moments, std::uint64_t pair_seed);

// s1 = (1/2) sum_i sum_{j in A_i} (nu_ij - E nu_ij) = (1/(2 lambda)) E[D Delta | F] - 1
// s2 = sum_i sum_{j in A_i} mu_ij                 = (1/lambda) E[|D| Delta | F]
// with conditional expectations over the resampled edges of copy i.
struct DriftTerms {
  double s1;
  double s2;
};

// General path: exact enumeration of the 2^e redraws of each copy's edges.
DriftTerms conditional_drift_terms(const ErSample& sample, const CopyTable& table,
                                   const SubgraphMoments& moments);
// Triangle path: no copy table; the overlap coefficients are common-neighbour
// counts and the 2^3 enumeration collapses to closed form.
DriftTerms conditional_drift_terms_triangle(const ErSample& sample, const SubgraphMoments& moments);

// Everything needed to run one subgraph-count experiment at (N, p, G).
class ErExperiment {
 public:
  ErExperiment(int N, double p, PatternGraph pattern, std::uint64_t master_seed);

  int N() const { return n_; }
  double p() const { return p_; }
  const PatternGraph& pattern() const { return pattern_; }
  const SubgraphMoments& moments() const { return moments_; }
  std::uint64_t master_seed() const { return seed_; }
  double lambda() const { return 1.0 / moments_.copy_count; }

  ErSample sample(std::uint64_t replication) const;
  double w(const ErSample& s) const;
  double w(std::uint64_t replication) const { return w(sample(replication)); }

  // Built on first use; throws ResourceError past the caps.
  const CopyTable& table() const;
  bool table_feasible(std::uint64_t copy_cap = kDefaultCopyCap,
                      std::uint64_t pair_cap = kDefaultPairTermCap) const;

  PairDraw draw_pair(std::uint64_t replication) const;
  DriftTerms drift_terms(std::uint64_t replication) const;

 private:
  int n_;
  double p_;
  PatternGraph pattern_;
  std::uint64_t seed_;
  SubgraphMoments moments_;
  mutable std::shared_ptr<const CopyTable> table_;
  mutable std::once_flag table_once_;
};

}  // namespace steinmd
