#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace steinmd {

using VertexPair = std::pair<int, int>;

inline constexpr int kMaxPatternVertices = 8;
inline constexpr std::uint64_t kDefaultCopyCap = 10'000'000;

// Index of the unordered pair {a, b} (0-based, a < b) among the C(n, 2) edges
// of K_n, in row-major order (0,1), (0,2), ..., (1,2), ...
constexpr std::size_t pair_index(int a, int b, int n) {
  const auto ua = static_cast<std::size_t>(a);
  const auto un = static_cast<std::size_t>(n);
  return ua * un - ua * (ua + 1) / 2 + static_cast<std::size_t>(b - a - 1);
}

VertexPair pair_from_index(std::size_t id, int n);

// A small fixed graph G without isolated vertices. Vertices are 0-based
// internally; constructors accept the 1-based notation used in configs.
class PatternGraph {
 public:
  int vertex_count() const { return v_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  // Canonical order: a < b, sorted lexicographically.
  std::span<const VertexPair> edges() const { return edges_; }
  // Bit k set for local pair k = pair_index(a, b, v).
  std::uint32_t edge_mask() const { return mask_; }
  // Distinct edge sets of the relabelings of G on {0..v-1}, sorted. Each one
  // is a distinct copy of G on a fixed v-vertex set.
  std::span<const std::uint32_t> labelings() const { return labelings_; }
  std::uint64_t automorphism_count() const;
  bool is_triangle() const { return v_ == 3 && edges_.size() == 3; }
  bool is_connected() const;
  // "v=3; edges=1-2,1-3,2-3"
  std::string to_string() const;

  friend PatternGraph make_pattern(int v, std::span<const VertexPair> edges_one_based);
  friend bool operator==(const PatternGraph& a, const PatternGraph& b) {
    return a.v_ == b.v_ && a.edges_ == b.edges_;
  }

 private:
  int v_ = 0;
  std::vector<VertexPair> edges_;
  std::uint32_t mask_ = 0;
  std::vector<std::uint32_t> labelings_;
};

// Throws ValidationError on self-loops, duplicate edges, isolated vertices,
// endpoints outside {1..v}, v > 8, or an empty edge list.
PatternGraph make_pattern(int v, std::span<const VertexPair> edges_one_based);
PatternGraph make_pattern(int v, std::initializer_list<VertexPair> edges_one_based);

// Accepts "v=3; edges=1-2,2-3,1-3" or one of the names edge, 2-path, triangle,
// 4-cycle, 3-star, k4.
PatternGraph parse_pattern(std::string_view text);
// {"v":3,"edges":[[1,2],[2,3],[1,3]]}, or a string accepted by parse_pattern.
PatternGraph pattern_from_json(const nlohmann::json& j);
nlohmann::json pattern_to_json(const PatternGraph& g);

struct CopyIndex {
  std::vector<std::uint32_t> edge_ids;  // sorted edge ids of K_N
  auto operator<=>(const CopyIndex&) const = default;
};

// |I_N| = C(N, v) * v! / |Aut(G)|.
double copy_count(int N, const PatternGraph& g);

// Every distinct edge-set copy of G in K_N exactly once, sorted. Throws
// ResourceError if more than `cap` copies would be produced.
std::vector<CopyIndex> enumerate_copies(int N, const PatternGraph& g,
                                        std::uint64_t cap = kDefaultCopyCap);

// How "H subset of G" is read in psi. Both readings give the same minimum
// (adding edges on a fixed vertex span only lowers N^v p^e); the induced
// reading is kept for auditing.
enum class SubgraphReading { edge_subsets, induced };

// min over subgraphs H with e(H) > 0 of N^{v(H)} p^{e(H)}; v(H) counts vertices
// incident to an edge of H under the edge-subset reading.
double psi(int N, double p, const PatternGraph& g,
           SubgraphReading reading = SubgraphReading::edge_subsets);

// For a fixed copy i, the number of copies j (including i itself) that share
// `shared_edges` >= 1 edges and `shared_vertices` vertices with i.
struct OverlapClass {
  int shared_edges;
  int shared_vertices;
  double multiplicity;
};
std::vector<OverlapClass> overlap_classes(int N, const PatternGraph& g);

struct SubgraphMoments {
  int N = 0;
  double p = 0.0;
  double copy_count = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double psi = 0.0;
  double sigma() const;
};

// Mean |I_N| p^e and variance sum over ordered overlapping pairs of
// p^{2e - |i cap j|} - p^{2e}. Copies of G are a single orbit under Sym(N),
// so the pair sum is |I_N| times the sum over overlap classes of one copy.
SubgraphMoments exact_moments(int N, double p, const PatternGraph& g);

// (1 - p) N^{2v} p^{2e} / psi, i.e. the variance lower-bound rate with C = 1.
double sigma_lower_bound(int N, double p, const PatternGraph& g);

double binomial_coefficient(int n, int k);

}  // namespace steinmd
