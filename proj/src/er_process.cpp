#include "steinmd/er_process.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iostream>
#include <numeric>

#include "steinmd/errors.hpp"
#include "steinmd/rng.hpp"

namespace steinmd {

double clamp_probability(double p, bool* clamped) {
  if (!std::isfinite(p)) throw DomainError("edge probability must be finite");
  const double c = std::clamp(p, kMinEdgeProbability, 1.0 - kMinEdgeProbability);
  if (clamped) *clamped = (c != p);
  return c;
}

ErSample::ErSample(int N, std::uint64_t seed_tag)
    : n_(N),
      words_((N + 63) / 64),
      edge_total_(static_cast<std::size_t>(N) * static_cast<std::size_t>(N > 0 ? N - 1 : 0) / 2),
      seed_tag_(seed_tag),
      bits_((edge_total_ + 63) / 64, 0),
      rows_(static_cast<std::size_t>(N) * static_cast<std::size_t>(words_), 0) {
  if (N < 1) throw DomainError("ErSample: N must be positive");
}

ErSample ErSample::complete(int N) {
  ErSample s(N);
  for (int a = 0; a < N; ++a)
    for (int b = a + 1; b < N; ++b) s.set_edge(a, b, true);
  return s;
}

void ErSample::set_edge(int a, int b, bool on) {
  if (a > b) std::swap(a, b);
  const std::size_t id = pair_index(a, b, n_);
  const auto set_bit = [on](std::uint64_t& word, int bit) {
    const std::uint64_t m = std::uint64_t{1} << bit;
    word = on ? (word | m) : (word & ~m);
  };
  set_bit(bits_[id >> 6], static_cast<int>(id & 63));
  set_bit(rows_[static_cast<std::size_t>(a * words_ + (b >> 6))], b & 63);
  set_bit(rows_[static_cast<std::size_t>(b * words_ + (a >> 6))], a & 63);
}

std::size_t ErSample::edge_count() const {
  std::size_t c = 0;
  for (auto w : bits_) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

ErSample sample_graph(int N, double p, std::uint64_t master_seed, std::uint64_t replication) {
  const std::uint64_t threshold = bernoulli_threshold(clamp_probability(p));
  auto gen = make_stream(master_seed, replication, StreamTag::graph);
  ErSample s(N, replication);
  for (int a = 0; a < N; ++a)
    for (int b = a + 1; b < N; ++b)
      if (gen() < threshold) s.set_edge(a, b, true);
  return s;
}

namespace {

std::uint64_t count_triangles(const ErSample& s) {
  const int n = s.N();
  const int words = s.words_per_row();
  std::uint64_t total = 0;
  for (int a = 0; a < n; ++a) {
    const auto ra = s.row(a);
    for (int b = a + 1; b < n; ++b) {
      if (!s.has_edge(a, b)) continue;
      const auto rb = s.row(b);
      // Third vertex c > b only.
      const int first_word = (b + 1) >> 6;
      for (int w = first_word; w < words; ++w) {
        std::uint64_t m = ra[static_cast<std::size_t>(w)] & rb[static_cast<std::size_t>(w)];
        if (w == first_word) {
          const int shift = (b + 1) & 63;
          m &= (shift == 0) ? ~std::uint64_t{0} : (~std::uint64_t{0} << shift);
        }
        total += static_cast<std::uint64_t>(std::popcount(m));
      }
    }
  }
  return total;
}

struct Backtracker {
  const ErSample& s;
  int v;
  std::vector<int> order;                   // pattern vertices in placement order
  std::vector<std::vector<int>> back_nbrs;  // earlier-placed neighbours per position
  std::vector<int> image;                   // pattern vertex -> sample vertex
  std::vector<bool> used;
  std::uint64_t count = 0;

  void place(std::size_t pos) {
    if (pos == order.size()) {
      ++count;
      return;
    }
    const int x = order[pos];
    const auto& nbrs = back_nbrs[pos];
    auto try_vertex = [&](int y) {
      if (used[static_cast<std::size_t>(y)]) return;
      for (std::size_t k = 1; k < nbrs.size(); ++k)
        if (!s.has_edge(image[static_cast<std::size_t>(nbrs[k])], y)) return;
      image[static_cast<std::size_t>(x)] = y;
      used[static_cast<std::size_t>(y)] = true;
      place(pos + 1);
      used[static_cast<std::size_t>(y)] = false;
    };
    if (nbrs.empty()) {
      for (int y = 0; y < s.N(); ++y) try_vertex(y);
      return;
    }
    const auto row = s.row(image[static_cast<std::size_t>(nbrs[0])]);
    for (std::size_t w = 0; w < row.size(); ++w) {
      std::uint64_t m = row[w];
      while (m) {
        const int bit = std::countr_zero(m);
        m &= m - 1;
        try_vertex(static_cast<int>(w * 64) + bit);
      }
    }
  }
};

}  // namespace

std::uint64_t count_copies_in(const ErSample& sample, const PatternGraph& g) {
  if (sample.N() < g.vertex_count()) return 0;
  if (g.is_triangle()) return count_triangles(sample);

  const int v = g.vertex_count();
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(v));
  for (auto [a, b] : g.edges()) {
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }
  // BFS order per component so that every vertex after a component's root
  // has an earlier neighbour to draw candidates from.
  std::vector<int> order;
  std::vector<bool> seen(static_cast<std::size_t>(v), false);
  for (int root = 0; root < v; ++root) {
    if (seen[static_cast<std::size_t>(root)]) continue;
    std::size_t head = order.size();
    order.push_back(root);
    seen[static_cast<std::size_t>(root)] = true;
    while (head < order.size()) {
      const int x = order[head++];
      for (int y : adj[static_cast<std::size_t>(x)])
        if (!seen[static_cast<std::size_t>(y)]) {
          seen[static_cast<std::size_t>(y)] = true;
          order.push_back(y);
        }
    }
  }
  Backtracker bt{sample, v, order, {}, std::vector<int>(static_cast<std::size_t>(v), -1),
                 std::vector<bool>(static_cast<std::size_t>(sample.N()), false)};
  std::vector<int> position(static_cast<std::size_t>(v));
  for (std::size_t k = 0; k < order.size(); ++k) position[static_cast<std::size_t>(order[k])] = static_cast<int>(k);
  for (std::size_t k = 0; k < order.size(); ++k) {
    std::vector<int> nb;
    for (int y : adj[static_cast<std::size_t>(order[k])])
      if (position[static_cast<std::size_t>(y)] < static_cast<int>(k)) nb.push_back(y);
    bt.back_nbrs.push_back(std::move(nb));
  }
  bt.place(0);
  return bt.count / g.automorphism_count();
}

double w_statistic(double count, const SubgraphMoments& moments) {
  if (!(moments.variance > 0.0)) throw DegenerateError("w_statistic: zero variance");
  return (count - moments.mean) / moments.sigma();
}

CopyTable::CopyTable(int N, const PatternGraph& g, std::uint64_t copy_cap, std::uint64_t pair_cap)
    : n_(N), e_(g.edge_count()) {
  double per_copy = 0.0;
  for (const auto& c : overlap_classes(N, g)) per_copy += c.multiplicity;
  const double expected_pairs = copy_count(N, g) * per_copy;
  if (expected_pairs > static_cast<double>(pair_cap))
    throw ResourceError("copy table: " + std::to_string(static_cast<long double>(expected_pairs)) +
                        " overlapping pair terms exceed the cap of " + std::to_string(pair_cap));
  const auto copies = enumerate_copies(N, g, copy_cap);
  count_ = copies.size();
  edges_.reserve(count_ * static_cast<std::size_t>(e_));
  for (const auto& c : copies) edges_.insert(edges_.end(), c.edge_ids.begin(), c.edge_ids.end());

  const std::size_t total_edges = static_cast<std::size_t>(N) * static_cast<std::size_t>(N - 1) / 2;
  std::vector<std::vector<std::uint32_t>> by_edge(total_edges);
  for (std::size_t i = 0; i < count_; ++i)
    for (auto id : edges(i)) by_edge[id].push_back(static_cast<std::uint32_t>(i));

  offsets_.reserve(count_ + 1);
  offsets_.push_back(0);
  std::vector<std::uint32_t> candidates;
  for (std::size_t i = 0; i < count_; ++i) {
    candidates.clear();
    for (auto id : edges(i)) candidates.insert(candidates.end(), by_edge[id].begin(), by_edge[id].end());
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    const auto mine = edges(i);
    for (auto j : candidates) {
      Neighbor nb{j, 0, static_cast<std::uint32_t>(rest_.size()), 0};
      for (auto id : edges(j)) {
        const auto it = std::lower_bound(mine.begin(), mine.end(), id);
        if (it != mine.end() && *it == id) {
          nb.shared_mask |= 1U << static_cast<unsigned>(it - mine.begin());
        } else {
          rest_.push_back(id);
          ++nb.rest_count;
        }
      }
      neighbors_.push_back(nb);
    }
    offsets_.push_back(neighbors_.size());
  }
}

CopyIndex CopyTable::copy(std::size_t i) const {
  const auto e = edges(i);
  return CopyIndex{{e.begin(), e.end()}};
}

bool CopyTable::present(const ErSample& sample, std::size_t i) const {
  for (auto id : edges(i))
    if (!sample.edge(id)) return false;
  return true;
}

std::uint64_t CopyTable::count_present(const ErSample& sample) const {
  std::uint64_t c = 0;
  for (std::size_t i = 0; i < count_; ++i) c += present(sample, i) ? 1 : 0;
  return c;
}

namespace {

bool all_present(const ErSample& sample, std::span<const std::uint32_t> ids) {
  for (auto id : ids)
    if (!sample.edge(id)) return false;
  return true;
}

}  // namespace

PairDraw draw_exchangeable_pair(const ErSample& sample, const CopyTable& table,
                                const SubgraphMoments& moments, std::uint64_t pair_seed) {
  const double sigma = moments.sigma();
  if (!(sigma > 0.0)) throw DegenerateError("draw_exchangeable_pair: zero variance");
  Xoshiro256 gen(pair_seed);
  const std::size_t chosen = static_cast<std::size_t>(gen.below(table.size()));
  const std::uint64_t threshold = bernoulli_threshold(moments.p);
  const int e = table.edges_per_copy();
  const auto mine = table.edges(chosen);
  std::uint32_t old_bits = 0, new_bits = 0;
  for (int k = 0; k < e; ++k) {
    if (sample.edge(mine[static_cast<std::size_t>(k)])) old_bits |= 1U << k;
    if (gen() < threshold) new_bits |= 1U << k;
  }
  // S - S' restricted to copies overlapping the chosen one.
  double diff = 0.0;
  for (const auto& nb : table.neighbors(chosen)) {
    if (!all_present(sample, table.rest_edges(nb))) continue;
    const bool before = (old_bits & nb.shared_mask) == nb.shared_mask;
    const bool after = (new_bits & nb.shared_mask) == nb.shared_mask;
    diff += static_cast<double>(before) - static_cast<double>(after);
  }
  const std::uint32_t full = (1U << e) - 1U;
  PairDraw draw;
  draw.chosen = chosen;
  const double count = static_cast<double>(table.count_present(sample));
  draw.w = w_statistic(count, moments);
  draw.w_prime = w_statistic(count - diff, moments);
  draw.delta = draw.w - draw.w_prime;
  draw.d = (static_cast<double>(old_bits == full) - static_cast<double>(new_bits == full)) / sigma;
  return draw;
}

DriftTerms conditional_drift_terms(const ErSample& sample, const CopyTable& table,
                                   const SubgraphMoments& moments) {
  const double var = moments.variance;
  if (!(var > 0.0)) throw DegenerateError("conditional_drift_terms: zero variance");
  const int e = table.edges_per_copy();
  const std::size_t configs = std::size_t{1} << e;
  const std::uint32_t full = static_cast<std::uint32_t>(configs - 1);
  const double p = moments.p;

  std::vector<double> prob(configs);
  for (std::size_t x = 0; x < configs; ++x) {
    const int on = std::popcount(static_cast<std::uint32_t>(x));
    prob[x] = std::pow(p, on) * std::pow(1.0 - p, e - on);
  }
  std::vector<double> coeff(configs), local(configs);
  double nu_sum = 0.0, mu_sum = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    std::fill(coeff.begin(), coeff.end(), 0.0);
    for (const auto& nb : table.neighbors(i))
      if (all_present(sample, table.rest_edges(nb))) coeff[nb.shared_mask] += 1.0;
    // local[x] = number of overlapping copies present when copy i's edges read x:
    // a subset-sum (zeta) transform of the coefficients over shared masks.
    local = coeff;
    for (int bit = 0; bit < e; ++bit)
      for (std::size_t x = 0; x < configs; ++x)
        if (x >> bit & 1U) local[x] += local[x ^ (std::size_t{1} << bit)];

    std::uint32_t current = 0;
    const auto mine = table.edges(i);
    for (int k = 0; k < e; ++k)
      if (sample.edge(mine[static_cast<std::size_t>(k)])) current |= 1U << k;
    const double x_i = (current == full) ? 1.0 : 0.0;
    for (std::size_t x = 0; x < configs; ++x) {
      const double d = x_i - ((x == full) ? 1.0 : 0.0);
      if (d == 0.0) continue;
      const double delta = local[current] - local[x];
      nu_sum += prob[x] * d * delta;
      mu_sum += prob[x] * std::fabs(d) * delta;
    }
  }
  // (1/2) sum_i sum_j E nu_ij = (1/2) * 2 Var(S) / sigma^2 = 1.
  return {0.5 * nu_sum / var - 1.0, mu_sum / var};
}

DriftTerms conditional_drift_terms_triangle(const ErSample& sample, const SubgraphMoments& moments) {
  const double var = moments.variance;
  if (!(var > 0.0)) throw DegenerateError("conditional_drift_terms: zero variance");
  const int n = sample.N();
  const double p = moments.p;
  const double p3 = p * p * p;
  std::vector<int> common(static_cast<std::size_t>(n * n), 0);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      const auto ra = sample.row(a), rb = sample.row(b);
      int c = 0;
      for (std::size_t w = 0; w < ra.size(); ++w) c += std::popcount(ra[w] & rb[w]);
      common[static_cast<std::size_t>(a * n + b)] = c;
    }
  // Copy {a,b,c}: the copies sharing exactly edge ab are the triangles abx,
  // x != c, and they are present (outside ab) iff x is a common neighbour.
  // With T(x) = [x full] + sum_k x_k c_k the 2^3 redraw sum reduces to
  //   present copy: nu = mu = T(full) - E T(X'),
  //   absent copy:  nu = -mu = p^3 (T(full) - T(current)).
  double nu_sum = 0.0, mu_sum = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      const bool ab = sample.has_edge(a, b);
      for (int c = b + 1; c < n; ++c) {
        const bool ac = sample.has_edge(a, c), bc = sample.has_edge(b, c);
        const double c_ab = common[static_cast<std::size_t>(a * n + b)] - (ac && bc ? 1 : 0);
        const double c_ac = common[static_cast<std::size_t>(a * n + c)] - (ab && bc ? 1 : 0);
        const double c_bc = common[static_cast<std::size_t>(b * n + c)] - (ab && ac ? 1 : 0);
        const double t_full = 1.0 + c_ab + c_ac + c_bc;
        if (ab && ac && bc) {
          const double expected = p3 + p * (c_ab + c_ac + c_bc);
          nu_sum += t_full - expected;
          mu_sum += t_full - expected;
        } else {
          const double t_now = (ab ? c_ab : 0.0) + (ac ? c_ac : 0.0) + (bc ? c_bc : 0.0);
          const double v = p3 * (t_full - t_now);
          nu_sum += v;
          mu_sum -= v;
        }
      }
    }
  return {0.5 * nu_sum / var - 1.0, mu_sum / var};
}

ErExperiment::ErExperiment(int N, double p, PatternGraph pattern, std::uint64_t master_seed)
    : n_(N), p_(0.0), pattern_(std::move(pattern)), seed_(master_seed) {
  bool clamped = false;
  p_ = clamp_probability(p, &clamped);
  if (clamped) std::clog << "warning: edge probability " << p << " clamped to " << p_ << '\n';
  if (N < pattern_.vertex_count()) throw DomainError("ErExperiment: N must be at least v");
  moments_ = exact_moments(N, p_, pattern_);
}

ErSample ErExperiment::sample(std::uint64_t replication) const {
  return sample_graph(n_, p_, seed_, replication);
}

double ErExperiment::w(const ErSample& s) const {
  return w_statistic(static_cast<double>(count_copies_in(s, pattern_)), moments_);
}

bool ErExperiment::table_feasible(std::uint64_t copy_cap, std::uint64_t pair_cap) const {
  double per_copy = 0.0;
  for (const auto& c : overlap_classes(n_, pattern_)) per_copy += c.multiplicity;
  return moments_.copy_count <= static_cast<double>(copy_cap) &&
         moments_.copy_count * per_copy <= static_cast<double>(pair_cap);
}

const CopyTable& ErExperiment::table() const {
  std::call_once(table_once_, [this] { table_ = std::make_shared<const CopyTable>(n_, pattern_); });
  return *table_;
}

PairDraw ErExperiment::draw_pair(std::uint64_t replication) const {
  return draw_exchangeable_pair(sample(replication), table(), moments_,
                                mix_key(seed_, replication, static_cast<std::uint64_t>(StreamTag::pair)));
}

DriftTerms ErExperiment::drift_terms(std::uint64_t replication) const {
  const ErSample s = sample(replication);
  if (pattern_.is_triangle()) return conditional_drift_terms_triangle(s, moments_);
  return conditional_drift_terms(s, table(), moments_);
}

}  // namespace steinmd
