#include "steinmd/graph_model.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "steinmd/errors.hpp"

namespace steinmd {
namespace {

std::uint64_t factorial(int n) {
  std::uint64_t f = 1;
  for (int k = 2; k <= n; ++k) f *= static_cast<std::uint64_t>(k);
  return f;
}

// Advances `comb` (sorted, values in [0, n)) to the next k-combination in
// lexicographic order. Returns false after the last one.
bool next_combination(std::vector<int>& comb, int n) {
  const int k = static_cast<int>(comb.size());
  int i = k - 1;
  while (i >= 0 && comb[static_cast<std::size_t>(i)] == n - k + i) --i;
  if (i < 0) return false;
  ++comb[static_cast<std::size_t>(i)];
  for (int j = i + 1; j < k; ++j)
    comb[static_cast<std::size_t>(j)] = comb[static_cast<std::size_t>(j - 1)] + 1;
  return true;
}

std::vector<VertexPair> mask_to_local_pairs(std::uint32_t mask, int v) {
  std::vector<VertexPair> out;
  for (int a = 0; a < v; ++a)
    for (int b = a + 1; b < v; ++b)
      if (mask >> pair_index(a, b, v) & 1U) out.emplace_back(a, b);
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

int parse_int(const std::string& s, std::string_view context) {
  if (s.empty()) throw ValidationError("pattern: empty integer in " + std::string(context));
  std::size_t used = 0;
  int value = 0;
  try {
    value = std::stoi(s, &used);
  } catch (const std::exception&) {
    throw ValidationError("pattern: bad integer '" + s + "' in " + std::string(context));
  }
  if (used != s.size())
    throw ValidationError("pattern: bad integer '" + s + "' in " + std::string(context));
  return value;
}

}  // namespace

VertexPair pair_from_index(std::size_t id, int n) {
  int a = 0;
  std::size_t row = static_cast<std::size_t>(n - 1);
  while (id >= row) {
    id -= row;
    ++a;
    --row;
  }
  return {a, a + 1 + static_cast<int>(id)};
}

double binomial_coefficient(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

std::uint64_t PatternGraph::automorphism_count() const {
  return factorial(v_) / labelings_.size();
}

bool PatternGraph::is_connected() const {
  std::vector<int> parent(static_cast<std::size_t>(v_));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)];
    return x;
  };
  for (auto [a, b] : edges_) parent[static_cast<std::size_t>(find(a))] = find(b);
  const int root = find(0);
  for (int x = 1; x < v_; ++x)
    if (find(x) != root) return false;
  return true;
}

std::string PatternGraph::to_string() const {
  std::ostringstream os;
  os << "v=" << v_ << "; edges=";
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    if (k) os << ',';
    os << edges_[k].first + 1 << '-' << edges_[k].second + 1;
  }
  return os.str();
}

PatternGraph make_pattern(int v, std::span<const VertexPair> edges_one_based) {
  if (v < 1 || v > kMaxPatternVertices)
    throw ValidationError("pattern: vertex count must be in [1, 8], got " + std::to_string(v));
  if (edges_one_based.empty()) throw ValidationError("pattern: at least one edge required");
  PatternGraph g;
  g.v_ = v;
  std::vector<bool> touched(static_cast<std::size_t>(v), false);
  for (auto [a, b] : edges_one_based) {
    if (a < 1 || a > v || b < 1 || b > v)
      throw ValidationError("pattern: edge " + std::to_string(a) + "-" + std::to_string(b) +
                            " outside {1.." + std::to_string(v) + "}");
    if (a == b) throw ValidationError("pattern: self-loop at vertex " + std::to_string(a));
    const int lo = std::min(a, b) - 1, hi = std::max(a, b) - 1;
    const std::uint32_t bit = 1U << pair_index(lo, hi, v);
    if (g.mask_ & bit)
      throw ValidationError("pattern: duplicate edge " + std::to_string(lo + 1) + "-" +
                            std::to_string(hi + 1));
    g.mask_ |= bit;
    g.edges_.emplace_back(lo, hi);
    touched[static_cast<std::size_t>(lo)] = touched[static_cast<std::size_t>(hi)] = true;
  }
  for (int x = 0; x < v; ++x)
    if (!touched[static_cast<std::size_t>(x)])
      throw ValidationError("pattern: isolated vertex " + std::to_string(x + 1));
  std::sort(g.edges_.begin(), g.edges_.end());

  std::vector<int> perm(static_cast<std::size_t>(v));
  std::iota(perm.begin(), perm.end(), 0);
  std::set<std::uint32_t> seen;
  do {
    std::uint32_t m = 0;
    for (auto [a, b] : g.edges_) {
      const int pa = perm[static_cast<std::size_t>(a)], pb = perm[static_cast<std::size_t>(b)];
      m |= 1U << pair_index(std::min(pa, pb), std::max(pa, pb), v);
    }
    seen.insert(m);
  } while (std::next_permutation(perm.begin(), perm.end()));
  g.labelings_.assign(seen.begin(), seen.end());
  return g;
}

PatternGraph make_pattern(int v, std::initializer_list<VertexPair> edges_one_based) {
  return make_pattern(v, std::span<const VertexPair>(edges_one_based.begin(), edges_one_based.size()));
}

PatternGraph parse_pattern(std::string_view text) {
  std::string t = trim(text);
  std::string lower(t.size(), ' ');
  std::transform(t.begin(), t.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "edge") return make_pattern(2, {{1, 2}});
  if (lower == "2-path" || lower == "path2" || lower == "wedge") return make_pattern(3, {{1, 2}, {2, 3}});
  if (lower == "triangle") return make_pattern(3, {{1, 2}, {2, 3}, {1, 3}});
  if (lower == "4-cycle" || lower == "c4") return make_pattern(4, {{1, 2}, {2, 3}, {3, 4}, {1, 4}});
  if (lower == "3-star") return make_pattern(4, {{1, 2}, {1, 3}, {1, 4}});
  if (lower == "k4")
    return make_pattern(4, {{1, 2}, {1, 3}, {1, 4}, {2, 3}, {2, 4}, {3, 4}});

  int v = -1;
  std::vector<VertexPair> edges;
  bool have_edges = false;
  std::stringstream fields(t);
  std::string field;
  while (std::getline(fields, field, ';')) {
    field = trim(field);
    if (field.empty()) continue;
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw ValidationError("pattern: expected key=value, got '" + field + "'");
    const std::string key = trim(std::string_view(field).substr(0, eq));
    const std::string value = trim(std::string_view(field).substr(eq + 1));
    if (key == "v") {
      v = parse_int(value, "v");
    } else if (key == "edges") {
      have_edges = true;
      std::stringstream items(value);
      std::string item;
      while (std::getline(items, item, ',')) {
        item = trim(item);
        const auto dash = item.find('-');
        if (dash == std::string::npos) throw ValidationError("pattern: bad edge '" + item + "'");
        edges.emplace_back(parse_int(trim(std::string_view(item).substr(0, dash)), "edge"),
                           parse_int(trim(std::string_view(item).substr(dash + 1)), "edge"));
      }
    } else {
      throw ValidationError("pattern: unknown key '" + key + "'");
    }
  }
  if (v < 0 || !have_edges) throw ValidationError("pattern: need both 'v=' and 'edges=' in '" + t + "'");
  return make_pattern(v, edges);
}

PatternGraph pattern_from_json(const nlohmann::json& j) {
  if (j.is_string()) return parse_pattern(j.get<std::string>());
  if (!j.is_object() || !j.contains("v") || !j.contains("edges"))
    throw ValidationError("pattern: JSON must be a string or {\"v\":..,\"edges\":[[a,b],..]}");
  try {
    const int v = j.at("v").get<int>();
    std::vector<VertexPair> edges;
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw ValidationError("pattern: each edge must be [a,b]");
      edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    return make_pattern(v, edges);
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(std::string("pattern: ") + ex.what());
  }
}

nlohmann::json pattern_to_json(const PatternGraph& g) {
  nlohmann::json edges = nlohmann::json::array();
  for (auto [a, b] : g.edges()) edges.push_back({a + 1, b + 1});
  return {{"v", g.vertex_count()}, {"edges", edges}};
}

double copy_count(int N, const PatternGraph& g) {
  return binomial_coefficient(N, g.vertex_count()) * static_cast<double>(g.labelings().size());
}

std::vector<CopyIndex> enumerate_copies(int N, const PatternGraph& g, std::uint64_t cap) {
  const int v = g.vertex_count();
  if (N < v) return {};
  const double total = copy_count(N, g);
  if (total > static_cast<double>(cap))
    throw ResourceError("enumerate_copies: " + std::to_string(static_cast<long double>(total)) +
                        " copies exceed the cap of " + std::to_string(cap) +
                        "; use count-only mode");
  std::vector<std::vector<VertexPair>> local;
  for (auto m : g.labelings()) local.push_back(mask_to_local_pairs(m, v));

  std::vector<CopyIndex> out;
  out.reserve(static_cast<std::size_t>(total));
  std::vector<int> comb(static_cast<std::size_t>(v));
  std::iota(comb.begin(), comb.end(), 0);
  do {
    for (const auto& pairs : local) {
      CopyIndex c;
      c.edge_ids.reserve(pairs.size());
      for (auto [a, b] : pairs)
        c.edge_ids.push_back(static_cast<std::uint32_t>(
            pair_index(comb[static_cast<std::size_t>(a)], comb[static_cast<std::size_t>(b)], N)));
      std::sort(c.edge_ids.begin(), c.edge_ids.end());
      out.push_back(std::move(c));
    }
  } while (next_combination(comb, N));
  std::sort(out.begin(), out.end());
  return out;
}

double psi(int N, double p, const PatternGraph& g, SubgraphReading reading) {
  const int v = g.vertex_count();
  const int e = g.edge_count();
  const auto edges = g.edges();
  double best = std::numeric_limits<double>::infinity();
  auto consider = [&](int vh, int eh) {
    best = std::min(best, std::pow(static_cast<double>(N), vh) * std::pow(p, eh));
  };
  if (reading == SubgraphReading::edge_subsets && e <= 20) {
    std::set<std::pair<int, int>> classes;
    for (std::uint32_t sub = 1; sub < (1U << e); ++sub) {
      std::uint32_t verts = 0;
      for (int k = 0; k < e; ++k)
        if (sub >> k & 1U)
          verts |= (1U << edges[static_cast<std::size_t>(k)].first) |
                   (1U << edges[static_cast<std::size_t>(k)].second);
      classes.emplace(std::popcount(verts), std::popcount(sub));
    }
    for (auto [vh, eh] : classes) consider(vh, eh);
    return best;
  }
  // Vertex subsets S with at least one edge inside; v(H) = |S|, e(H) = e(G[S]).
  // Also the fallback for the edge-subset reading when 2^e is too large: the
  // minimum over edge subsets spanning S is attained by all edges inside S.
  for (std::uint32_t s = 1; s < (1U << v); ++s) {
    int inside = 0;
    for (auto [a, b] : edges)
      if ((s >> a & 1U) && (s >> b & 1U)) ++inside;
    if (inside == 0) continue;
    if (reading == SubgraphReading::edge_subsets) {
      std::uint32_t touched = 0;
      for (auto [a, b] : edges)
        if ((s >> a & 1U) && (s >> b & 1U)) touched |= (1U << a) | (1U << b);
      consider(std::popcount(touched), inside);
    } else {
      consider(std::popcount(s), inside);
    }
  }
  return best;
}

std::vector<OverlapClass> overlap_classes(int N, const PatternGraph& g) {
  const int v = g.vertex_count();
  if (N < v) return {};
  const int universe = 2 * v;  // v base vertices plus at most v - 2 outside ones
  std::set<std::uint64_t> base_edges;
  for (auto [a, b] : g.edges()) base_edges.insert(pair_index(a, b, universe));

  std::vector<std::vector<VertexPair>> local;
  for (auto m : g.labelings()) local.push_back(mask_to_local_pairs(m, v));

  std::map<std::pair<int, int>, double> acc;
  for (int shared_v = 2; shared_v <= v; ++shared_v) {
    const int outside = v - shared_v;
    if (outside > N - v) continue;
    const double weight = binomial_coefficient(N - v, outside);
    std::vector<int> comb(static_cast<std::size_t>(shared_v));
    std::iota(comb.begin(), comb.end(), 0);
    do {
      // Sorted vertex set: chosen base vertices then outside vertices v..v+outside-1.
      std::vector<int> verts = comb;
      for (int k = 0; k < outside; ++k) verts.push_back(v + k);
      for (const auto& pairs : local) {
        int shared_e = 0;
        for (auto [a, b] : pairs)
          if (base_edges.count(pair_index(verts[static_cast<std::size_t>(a)],
                                          verts[static_cast<std::size_t>(b)], universe)))
            ++shared_e;
        if (shared_e > 0) acc[{shared_e, shared_v}] += weight;
      }
    } while (next_combination(comb, v));
  }
  std::vector<OverlapClass> out;
  for (auto [key, mult] : acc) out.push_back({key.first, key.second, mult});
  return out;
}

double SubgraphMoments::sigma() const { return std::sqrt(variance); }

SubgraphMoments exact_moments(int N, double p, const PatternGraph& g) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("exact_moments: p must be in (0, 1)");
  if (N < g.vertex_count()) throw DomainError("exact_moments: N must be at least v");
  const int e = g.edge_count();
  SubgraphMoments m;
  m.N = N;
  m.p = p;
  m.copy_count = copy_count(N, g);
  m.mean = m.copy_count * std::pow(p, e);
  const double p2e = std::pow(p, 2 * e);
  double per_copy = 0.0;
  for (const auto& c : overlap_classes(N, g))
    per_copy += c.multiplicity * (std::pow(p, 2 * e - c.shared_edges) - p2e);
  m.variance = m.copy_count * per_copy;
  m.psi = psi(N, p, g);
  return m;
}

double sigma_lower_bound(int N, double p, const PatternGraph& g) {
  const double v = g.vertex_count(), e = g.edge_count();
  return (1.0 - p) * std::pow(static_cast<double>(N), 2 * v) * std::pow(p, 2 * e) / psi(N, p, g);
}

}  // namespace steinmd
