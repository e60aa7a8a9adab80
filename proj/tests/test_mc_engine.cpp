#include <cmath>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/normal.hpp>
#include <doctest.h>

#include "steinmd/errors.hpp"
#include "steinmd/mc_engine.hpp"
#include "steinmd/normal_kernel.hpp"
#include "steinmd/rng.hpp"

using namespace steinmd;

namespace {

double normal_draw(std::uint64_t rep) {
  auto g = make_stream(42, rep, StreamTag::test);
  return standard_normal(g);
}

const std::vector<double>& normal_sample() {
  static const std::vector<double> s = run_replications(normal_draw, 1000000, 2);
  return s;
}

}  // namespace

TEST_CASE("replications: empty, deterministic, thread-count independent") {
  CHECK(run_replications(normal_draw, 0).empty());
  const auto a = run_replications(normal_draw, 5000, 1);
  CHECK(a == run_replications(normal_draw, 5000, 1));
  CHECK(a == run_replications(normal_draw, 5000, 4));
  CHECK(a == run_replications(normal_draw, 5000, 16));
  const std::vector<double> grid = {0, 0.5, 1, 2};
  const auto t1 = tail_curve(a, grid);
  const auto t16 = tail_curve(run_replications(normal_draw, 5000, 16), grid);
  CHECK(t1.counts == t16.counts);
  CHECK(t1.ci_low == t16.ci_low);
}

TEST_CASE("worker exceptions propagate") {
  auto bad = [](std::uint64_t r) -> double {
    if (r == 777) throw std::runtime_error("boom");
    return 0.0;
  };
  CHECK_THROWS_AS(run_replications(bad, 1000, 4), std::runtime_error);
}

TEST_CASE("exact normal sampler") {
  const auto& s = normal_sample();
  const MeanEstimate m = mean_estimate(s);
  CHECK(std::abs(m.mean) < 4.0 / std::sqrt(double(s.size())));
  CHECK(ks_distance(s) <= 2e-3);
  const auto tail = tail_curve(s, {1.0});
  CHECK(tail.ci_low[0] <= 0.158655);
  CHECK(tail.ci_high[0] >= 0.158655);
  const auto ratio = ratio_curve(tail_curve(s, parse_z_grid("0:3:0.5"), 0.999));
  for (std::size_t k = 0; k < ratio.z_grid.size(); ++k) {
    CHECK(ratio.ratio_ci_low[k] <= 1.0);
    CHECK(ratio.ratio_ci_high[k] >= 1.0);
  }
}

TEST_CASE("Clopper-Pearson") {
  auto [lo0, hi0] = clopper_pearson(0, 1, 0.95);
  CHECK(lo0 == 0.0);
  CHECK(hi0 == doctest::Approx(0.975));
  auto [lo1, hi1] = clopper_pearson(5, 5, 0.95);
  CHECK(hi1 == 1.0);
  CHECK(lo1 == doctest::Approx(std::pow(0.025, 0.2)));
  auto [lo, hi] = clopper_pearson(7, 40, 0.9);
  CHECK(lo == doctest::Approx(boost::math::ibeta_inv(7.0, 34.0, 0.05)));
  CHECK(hi == doctest::Approx(boost::math::ibeta_inv(8.0, 33.0, 0.95)));
  CHECK_THROWS(clopper_pearson(3, 2, 0.95));
}

TEST_CASE("Clopper-Pearson coverage") {
  const double p = 0.07;
  const int batches = 200, n = 300;
  int covered = 0;
  for (int b = 0; b < batches; ++b) {
    auto g = make_stream(9, b, StreamTag::test);
    const std::uint64_t threshold = bernoulli_threshold(p);
    std::uint64_t x = 0;
    for (int i = 0; i < n; ++i) x += g() < threshold;
    const auto [lo, hi] = clopper_pearson(x, n, 0.95);
    covered += lo <= p && p <= hi;
  }
  CHECK(covered >= 180);
}

TEST_CASE("tail curve basics") {
  const std::vector<double> one = {0.0};
  const auto t = tail_curve(one, {1.0});
  CHECK(t.estimates[0] == 0.0);
  CHECK(t.ci_high[0] == doctest::Approx(0.975));
  const std::vector<double> high = {2, 3, 4};
  CHECK(tail_curve(high, {1.0}).estimates[0] == 1.0);
  CHECK_THROWS_AS(tail_curve(std::vector<double>{}, {1.0}), DomainError);
  CHECK_THROWS_AS(tail_curve(high, {1.0, 0.5}), ValidationError);

  const auto& s = normal_sample();
  const auto grid = parse_z_grid("0:3:0.25");
  const auto c = tail_curve(std::span<const double>(s.data(), 20000), grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    CHECK(c.ci_low[k] <= c.estimates[k]);
    CHECK(c.estimates[k] <= c.ci_high[k]);
    if (k) CHECK(c.estimates[k] <= c.estimates[k - 1]);
  }
  const auto r = ratio_curve(c);
  for (std::size_t k = 0; k < grid.size(); ++k)
    CHECK(r.ratio[k] == doctest::Approx(c.estimates[k] / std_normal_tail(grid[k])).epsilon(1e-14));
  CHECK(r.ratio[0] == doctest::Approx(2 * c.estimates[0]));
  CHECK(r.ratio_ci_high[0] == doctest::Approx(2 * c.ci_high[0]));

  const auto z = ratio_curve(tail_curve(one, {1.0}));
  CHECK(z.ratio[0] == 0.0);
  CHECK(z.one_sided[0]);
}

TEST_CASE("count merging") {
  const auto& s = normal_sample();
  const std::vector<double> grid = {-1, 0, 1, 2};
  const std::span<const double> all(s.data(), 9000);
  TailCounts parts = count_exceedances(all.subspan(0, 4000), grid);
  parts.merge(count_exceedances(all.subspan(4000), grid));
  const TailCounts whole = count_exceedances(all, grid);
  CHECK(parts.counts == whole.counts);
  CHECK(parts.R == whole.R);
  TailCounts other = count_exceedances(all, {0.5});
  CHECK_THROWS(parts.merge(other));
}

TEST_CASE("KS distance") {
  const std::vector<double> zero = {0.0};
  CHECK(ks_distance(zero) == doctest::Approx(0.5));
  std::vector<double> q;
  for (int i = 1; i <= 100; ++i) q.push_back(boost::math::quantile(boost::math::normal(), (i - 0.5) / 100));
  CHECK(ks_distance(q) == doctest::Approx(0.005).epsilon(1e-9));
  CHECK(dkw_margin(1000000) == doctest::Approx(std::sqrt(std::log(200.0) / 2e6)));
}

TEST_CASE("two-sample KS") {
  const auto& s = normal_sample();
  const std::span<const double> a(s.data(), 5000), b(s.data() + 5000, 5000);
  CHECK(two_sample_ks(a, b).p_value > 1e-3);
  std::vector<double> shifted(b.begin(), b.end());
  for (auto& x : shifted) x += 0.2;
  CHECK(two_sample_ks(a, shifted).p_value < 1e-6);
  CHECK(two_sample_ks(a, a).statistic == 0.0);
}

TEST_CASE("rate regression") {
  const std::vector<std::pair<double, double>> exact = {{10, 0.1}, {100, 0.01}, {1000, 0.001}};
  CHECK(rate_regression(exact).slope == doctest::Approx(-1.0));
  CHECK(rate_regression(exact).residual == doctest::Approx(0.0).epsilon(1e-12));
  const std::vector<std::pair<double, double>> flat = {{10, 0.3}, {20, 0.3}, {40, 0.3}};
  CHECK(rate_regression(flat).slope == doctest::Approx(0.0).epsilon(1e-12));
  const std::vector<std::pair<double, double>> two = {{10, 0.1}, {100, 0.012}};
  CHECK(rate_regression(two).slope == doctest::Approx(-0.92082).epsilon(1e-5));
  const std::vector<std::pair<double, double>> bad = {{10, 0.1}, {100, 0.0}};
  CHECK_THROWS_AS(rate_regression(bad), DomainError);
}

TEST_CASE("linear fit") {
  std::vector<double> x, y;
  for (int i = 0; i < 50; ++i) {
    x.push_back(i);
    y.push_back(3.0 - 0.5 * i + ((i % 2) ? 0.01 : -0.01));
  }
  const auto f = linear_fit(x, y);
  CHECK(f.slope == doctest::Approx(-0.5).epsilon(1e-3));
  CHECK(f.intercept == doctest::Approx(3.0).epsilon(1e-2));
  CHECK(f.se_slope > 0);
  CHECK(f.se_slope_robust > 0);
}

TEST_CASE("guardrail and grid parsing") {
  CHECK(insufficient_exceedances(1000, 3.0));
  CHECK_FALSE(insufficient_exceedances(1000000, 3.0));
  const auto g = parse_z_grid("0:1:0.25");
  REQUIRE(g.size() == 5);
  CHECK(g.back() == doctest::Approx(1.0));
  CHECK(parse_z_grid("0.5, 1,1.5") == std::vector<double>{0.5, 1.0, 1.5});
  CHECK_THROWS_AS(parse_z_grid("1:0:0.1"), ValidationError);
  CHECK_THROWS_AS(parse_z_grid("a,b"), ValidationError);
}

TEST_CASE("CSV and JSON output") {
  const auto& s = normal_sample();
  const auto t = tail_curve(std::span<const double>(s.data(), 1000), {0.0, 1.0});
  const auto r = ratio_curve(t);
  std::ostringstream os;
  write_curve_csv(os, t, r);
  std::istringstream in(os.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "z,estimate,ci_low,ci_high,normal_tail,ratio,ratio_ci_low,ratio_ci_high");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 2);
  const auto j = curve_to_json(t, r);
  CHECK(j.dump().find("ratio_ci_high") != std::string::npos);
}
