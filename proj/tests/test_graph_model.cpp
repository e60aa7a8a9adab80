#include <cmath>

#include <doctest.h>

#include "brute.hpp"
#include "steinmd/errors.hpp"
#include "steinmd/graph_model.hpp"
#include "steinmd/oracle.hpp"

using namespace steinmd;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

const char* kPatterns[] = {"edge", "2-path", "triangle", "4-cycle"};

}  // namespace

TEST_CASE("make_pattern validation") {
  const auto tri = make_pattern(3, {{1, 2}, {2, 3}, {1, 3}});
  CHECK(tri.vertex_count() == 3);
  CHECK(tri.edge_count() == 3);
  CHECK(tri.is_triangle());
  const auto path = make_pattern(3, {{1, 2}, {2, 3}});
  CHECK(path.edge_count() == 2);
  CHECK_FALSE(path.is_triangle());
  CHECK_THROWS_AS(make_pattern(3, {{1, 2}, {1, 2}}), ValidationError);
  CHECK_THROWS_AS(make_pattern(3, {{1, 2}, {2, 2}}), ValidationError);
  CHECK_THROWS_AS(make_pattern(4, {{1, 2}, {2, 3}}), ValidationError);
  CHECK_THROWS_AS(make_pattern(9, {{1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}, {7, 8}, {8, 9}}), ValidationError);
  CHECK_THROWS_AS(make_pattern(3, {{1, 4}, {2, 3}}), ValidationError);
  CHECK_THROWS_AS(make_pattern(2, std::initializer_list<VertexPair>{}), ValidationError);
  // Canonical ordering regardless of input order.
  CHECK(make_pattern(3, {{3, 1}, {2, 3}, {2, 1}}) == tri);
}

TEST_CASE("pattern text and JSON forms") {
  const auto tri = parse_pattern("v=3; edges=1-2,2-3,1-3");
  CHECK(tri == parse_pattern("triangle"));
  CHECK(parse_pattern(tri.to_string()) == tri);
  CHECK(pattern_from_json(nlohmann::json::parse(R"({"v":3,"edges":[[1,2],[2,3],[1,3]]})")) == tri);
  CHECK(pattern_from_json(pattern_to_json(parse_pattern("4-cycle"))) == parse_pattern("4-cycle"));
  CHECK(parse_pattern("k4").edge_count() == 6);
  CHECK(parse_pattern("3-star").vertex_count() == 4);
  CHECK_THROWS_AS(parse_pattern("v=3; edges=1-2,2-x"), ValidationError);
  CHECK_THROWS_AS(parse_pattern("pentagram"), ValidationError);
  CHECK_THROWS_AS(parse_pattern(""), ValidationError);
}

TEST_CASE("automorphisms") {
  CHECK(parse_pattern("edge").automorphism_count() == 2);
  CHECK(parse_pattern("2-path").automorphism_count() == 2);
  CHECK(parse_pattern("triangle").automorphism_count() == 6);
  CHECK(parse_pattern("4-cycle").automorphism_count() == 8);
  CHECK(parse_pattern("3-star").automorphism_count() == 6);
  CHECK(parse_pattern("k4").automorphism_count() == 24);
}

TEST_CASE("pair index round trip") {
  for (int n : {2, 5, 13, 64}) {
    std::size_t id = 0;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b, ++id) {
        CHECK(pair_index(a, b, n) == id);
        CHECK(pair_from_index(id, n) == VertexPair{a, b});
      }
  }
}

TEST_CASE("enumerate_copies agrees with the injection oracle") {
  CHECK(enumerate_copies(4, parse_pattern("triangle")).size() == 4);
  CHECK(enumerate_copies(4, parse_pattern("2-path")).size() == 12);
  CHECK(enumerate_copies(3, parse_pattern("triangle")).size() == 1);
  for (const char* name : {"edge", "2-path", "triangle", "4-cycle", "3-star", "k4"}) {
    const auto g = parse_pattern(name);
    for (int N = g.vertex_count(); N <= 7; ++N) {
      const auto got = enumerate_copies(N, g);
      const auto want = brute::copies(N, g);
      REQUIRE(got.size() == want.size());
      CHECK(copy_count(N, g) == doctest::Approx(double(want.size())));
      for (std::size_t k = 0; k < got.size(); ++k) {
        std::vector<int> ids(got[k].edge_ids.begin(), got[k].edge_ids.end());
        CHECK(ids == want[k]);
      }
    }
  }
  for (int N = 3; N <= 12; ++N)
    CHECK(enumerate_copies(N, parse_pattern("triangle")).size() == std::size_t(binomial_coefficient(N, 3)));
  CHECK_THROWS_AS(enumerate_copies(40, parse_pattern("4-cycle"), 1000), ResourceError);
}

TEST_CASE("psi") {
  const auto tri = parse_pattern("triangle");
  CHECK(psi(10, 0.1, tri) == doctest::Approx(1.0));
  CHECK(psi(10, 0.99, tri) == doctest::Approx(99.0));
  CHECK(psi(100, 0.3, tri) == doctest::Approx(3000.0));
  CHECK(psi(17, 0.4, parse_pattern("edge")) == doctest::Approx(17.0 * 17.0 * 0.4));
  for (const char* name : {"edge", "2-path", "triangle", "4-cycle", "3-star", "k4"}) {
    const auto g = parse_pattern(name);
    for (int N : {4, 10, 50})
      for (double p : {0.01, 0.1, 0.3, 0.5, 0.9}) {
        const double want = brute::psi(N, p, g);
        CHECK(psi(N, p, g) == doctest::Approx(want).epsilon(1e-12));
        CHECK(psi(N, p, g, SubgraphReading::induced) == doctest::Approx(want).epsilon(1e-12));
      }
  }
}

TEST_CASE("psi is nondecreasing in N and p") {
  for (const char* name : {"2-path", "triangle", "4-cycle", "k4"}) {
    const auto g = parse_pattern(name);
    double prev = 0.0;
    for (int N = g.vertex_count(); N <= 200; N += 7) {
      const double v = psi(N, 0.2, g);
      CHECK(v >= prev);
      prev = v;
    }
    prev = 0.0;
    for (int k = 1; k < 100; ++k) {
      const double v = psi(30, 0.01 * k, g);
      CHECK(v >= prev);
      prev = v;
    }
  }
}

TEST_CASE("exact moments: reference values") {
  const auto tri = parse_pattern("triangle");
  auto m = exact_moments(4, 0.5, tri);
  CHECK(m.mean == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(m.variance == doctest::Approx(0.625).epsilon(1e-14));
  m = exact_moments(3, 0.5, tri);
  CHECK(m.mean == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(m.variance == doctest::Approx(0.109375).epsilon(1e-14));
  CHECK_THROWS_AS(exact_moments(2, 0.5, tri), DomainError);
  CHECK_THROWS_AS(exact_moments(5, 0.0, tri), DomainError);
  CHECK_THROWS_AS(exact_moments(5, 1.0, tri), DomainError);
}

TEST_CASE("exact moments equal exhaustive enumeration") {
  for (const char* name : kPatterns) {
    const auto g = parse_pattern(name);
    for (int N : {4, 5})
      for (double p : {0.1, 0.5, 0.77}) {
        const auto want = brute::exhaustive(N, p, g);
        const auto got = exact_moments(N, p, g);
        CAPTURE(name);
        CAPTURE(N);
        CAPTURE(p);
        CHECK(rel(got.mean, want.mean) <= 1e-10);
        CHECK(rel(got.variance, want.variance) <= 1e-10);
        const auto lib = exhaustive_moments(N, p, g);
        CHECK(rel(lib.mean, want.mean) <= 1e-12);
        CHECK(rel(lib.variance, want.variance) <= 1e-10);
      }
  }
}

TEST_CASE("exact moments invariants") {
  for (const char* name : {"edge", "2-path", "triangle", "4-cycle", "3-star", "k4"}) {
    const auto g = parse_pattern(name);
    for (int N : {g.vertex_count(), 9, 30, 60})
      for (double p : {0.05, 0.3, 0.5, 0.8}) {
        const auto m = exact_moments(N, p, g);
        CHECK(m.copy_count == doctest::Approx(copy_count(N, g)));
        CHECK(m.mean == doctest::Approx(m.copy_count * std::pow(p, g.edge_count())).epsilon(1e-14));
        CHECK(m.variance > 0.0);
        const double diag = m.copy_count * (std::pow(p, g.edge_count()) - std::pow(p, 2 * g.edge_count()));
        CHECK(m.variance >= diag * (1 - 1e-12));
        CHECK(m.psi <= std::pow(double(N), g.vertex_count()) * std::pow(p, g.edge_count()) * (1 + 1e-12));
      }
  }
}

TEST_CASE("sigma_lower_bound") {
  const auto tri = parse_pattern("triangle");
  CHECK(sigma_lower_bound(10, 0.1, tri) == doctest::Approx(0.9));
  CHECK(sigma_lower_bound(10, 0.5, tri) == doctest::Approx(156.25));
  CHECK(sigma_lower_bound(10, 1 - 1e-12, tri) < 1e-6);
}

TEST_CASE("overlap classes cover every overlapping copy") {
  for (const char* name : kPatterns) {
    const auto g = parse_pattern(name);
    for (int N : {g.vertex_count(), 6, 8}) {
      double total = 0.0;
      for (const auto& c : overlap_classes(N, g)) total += c.multiplicity;
      const auto all = brute::copies(N, g);
      const auto& first = all.front();
      double want = 0.0;
      for (const auto& other : all) {
        std::vector<int> shared;
        std::set_intersection(first.begin(), first.end(), other.begin(), other.end(), std::back_inserter(shared));
        want += !shared.empty();
      }
      CHECK(total == doctest::Approx(want));
    }
  }
}
