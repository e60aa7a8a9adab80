#include "steinmd/mc_engine.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/distributions/beta.hpp>

#include "steinmd/errors.hpp"
#include "steinmd/normal_kernel.hpp"

namespace steinmd {

std::vector<double> run_replications(const Sampler& sampler, std::size_t R, int threads) {
  return parallel_map<double>(R, threads, sampler);
}

void TailCounts::merge(const TailCounts& other) {
  if (other.z_grid != z_grid) throw ValidationError("tail counts: grids differ");
  for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += other.counts[k];
  R += other.R;
}

namespace {

void check_grid(const std::vector<double>& z) {
  for (double v : z)
    if (!std::isfinite(v)) throw ValidationError("z grid: non-finite point");
  if (!std::is_sorted(z.begin(), z.end())) throw ValidationError("z grid must be sorted");
}

}  // namespace

TailCounts count_exceedances(std::span<const double> samples, std::vector<double> z_grid) {
  check_grid(z_grid);
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  TailCounts c;
  c.R = sorted.size();
  c.counts.reserve(z_grid.size());
  for (double z : z_grid) {
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), z);
    c.counts.push_back(static_cast<std::uint64_t>(sorted.end() - it));
  }
  c.z_grid = std::move(z_grid);
  return c;
}

std::pair<double, double> clopper_pearson(std::uint64_t x, std::uint64_t n, double level) {
  if (n == 0) throw DomainError("clopper_pearson: no trials");
  if (x > n) throw DomainError("clopper_pearson: more successes than trials");
  if (!(level > 0.0 && level < 1.0)) throw DomainError("clopper_pearson: level must lie in (0, 1)");
  const double a = 1.0 - level;
  const double xs = static_cast<double>(x), ns = static_cast<double>(n);
  const double lo = x == 0 ? 0.0 : boost::math::quantile(boost::math::beta_distribution<>(xs, ns - xs + 1), a / 2);
  const double hi = x == n ? 1.0 : boost::math::quantile(boost::math::beta_distribution<>(xs + 1, ns - xs), 1 - a / 2);
  return {lo, hi};
}

TailCurve tail_curve(const TailCounts& counts, double level) {
  if (counts.R == 0) throw DomainError("tail_curve: no samples");
  TailCurve t;
  t.z_grid = counts.z_grid;
  t.counts = counts.counts;
  t.R = counts.R;
  t.level = level;
  for (std::uint64_t c : counts.counts) {
    t.estimates.push_back(static_cast<double>(c) / static_cast<double>(counts.R));
    const auto [lo, hi] = clopper_pearson(c, counts.R, level);
    t.ci_low.push_back(lo);
    t.ci_high.push_back(hi);
  }
  return t;
}

TailCurve tail_curve(std::span<const double> samples, std::vector<double> z_grid, double level) {
  if (samples.empty()) throw DomainError("tail_curve: no samples");
  return tail_curve(count_exceedances(samples, std::move(z_grid)), level);
}

RatioCurve ratio_curve(const TailCurve& tail) {
  RatioCurve r;
  r.z_grid = tail.z_grid;
  for (std::size_t k = 0; k < tail.z_grid.size(); ++k) {
    const double q = std_normal_tail(tail.z_grid[k]);
    r.normal_tail.push_back(q);
    r.ratio.push_back(tail.estimates[k] / q);
    r.ratio_ci_low.push_back(tail.ci_low[k] / q);
    r.ratio_ci_high.push_back(tail.ci_high[k] / q);
    r.one_sided.push_back(tail.counts[k] == 0);
  }
  return r;
}

double ks_distance_sorted(std::span<const double> sorted) {
  if (sorted.empty()) throw DomainError("ks_distance: no samples");
  const double R = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double phi = std_normal_cdf(sorted[i]);
    d = std::max({d, std::abs((i + 1) / R - phi), std::abs(i / R - phi)});
  }
  return d;
}

double ks_distance(std::span<const double> samples) {
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  return ks_distance_sorted(sorted);
}

namespace {

// P(K > x) for the Kolmogorov distribution.
double kolmogorov_survival(double x) {
  if (x < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace

TwoSampleKs two_sample_ks(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("two_sample_ks: empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double t = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == t) ++i;
    while (j < y.size() && y[j] == t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  const double ne = std::sqrt(n * m / (n + m));
  return {d, kolmogorov_survival((ne + 0.12 + 0.11 / ne) * d)};
}

double dkw_margin(std::size_t R, double alpha) {
  if (R == 0) throw DomainError("dkw_margin: no samples");
  return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(R)));
}

RateFit rate_regression(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2) throw ValidationError("rate_regression: need at least two points");
  const auto m = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd X(m, 2);
  Eigen::VectorXd y(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto [n, d] = points[static_cast<std::size_t>(k)];
    if (!(n > 0.0) || !(d > 0.0)) throw DomainError("rate_regression: N and distance must be positive");
    X(k, 0) = 1.0;
    X(k, 1) = std::log(n);
    y(k) = std::log(d);
  }
  const Eigen::Vector2d beta = X.colPivHouseholderQr().solve(y);
  RateFit fit;
  fit.intercept = beta(0);
  fit.slope = beta(1);
  fit.residual = std::sqrt((y - X * beta).squaredNorm() / static_cast<double>(m));
  return fit;
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("linear_fit: x and y differ in length");
  if (x.size() < 3) throw ValidationError("linear_fit: need at least three points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  if (!(sxx > 0.0)) throw DegenerateError("linear_fit: x has no spread");
  LinearFit f;
  f.n = x.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0.0, meat_slope = 0.0, meat_cross = 0.0, meat_level = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double e = y[k] - f.intercept - f.slope * x[k];
    const double dx = x[k] - mx;
    rss += e * e;
    meat_slope += dx * dx * e * e;
    meat_cross += dx * e * e;
    meat_level += e * e;
  }
  // Sandwich in centred coordinates: slope = sum dx y / sxx, intercept = ybar - slope mx.
  const double var_slope = meat_slope / (sxx * sxx);
  const double var_mean = meat_level / (n * n);
  const double cov = meat_cross / (n * sxx);
  f.se_slope_robust = std::sqrt(var_slope);
  f.se_intercept_robust = std::sqrt(std::max(0.0, var_mean - 2.0 * mx * cov + mx * mx * var_slope));
  const double s2 = rss / (n - 2.0);
  f.se_slope = std::sqrt(s2 / sxx);
  f.se_intercept = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
  return f;
}

MeanEstimate mean_estimate(std::span<const double> v) {
  if (v.empty()) throw DomainError("mean_estimate: no values");
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  MeanEstimate e;
  e.mean = mean;
  e.se = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return e;
}

bool insufficient_exceedances(std::uint64_t R, double z_max) {
  return static_cast<double>(R) * std_normal_tail(z_max) < 20.0;
}

namespace {

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

}  // namespace

void write_curve_csv(std::ostream& os, const TailCurve& tail, const RatioCurve& ratio) {
  os << "z,estimate,ci_low,ci_high,normal_tail,ratio,ratio_ci_low,ratio_ci_high\n";
  for (std::size_t k = 0; k < tail.z_grid.size(); ++k)
    os << num(tail.z_grid[k]) << ',' << num(tail.estimates[k]) << ',' << num(tail.ci_low[k]) << ','
       << num(tail.ci_high[k]) << ',' << num(ratio.normal_tail[k]) << ',' << num(ratio.ratio[k]) << ','
       << num(ratio.ratio_ci_low[k]) << ',' << num(ratio.ratio_ci_high[k]) << '\n';
}

nlohmann::json curve_to_json(const TailCurve& tail, const RatioCurve& ratio) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t k = 0; k < tail.z_grid.size(); ++k)
    rows.push_back({{"z", tail.z_grid[k]},
                    {"count", tail.counts[k]},
                    {"estimate", tail.estimates[k]},
                    {"ci_low", tail.ci_low[k]},
                    {"ci_high", tail.ci_high[k]},
                    {"normal_tail", ratio.normal_tail[k]},
                    {"ratio", ratio.ratio[k]},
                    {"ratio_ci_low", ratio.ratio_ci_low[k]},
                    {"ratio_ci_high", ratio.ratio_ci_high[k]},
                    {"one_sided", static_cast<bool>(ratio.one_sided[k])}});
  return {{"R", tail.R}, {"level", tail.level}, {"points", rows}};
}

std::vector<double> parse_z_grid(const std::string& text) {
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw ValidationError("z grid: cannot parse '" + s + "'");
    }
    if (used != s.size() || !std::isfinite(v)) throw ValidationError("z grid: cannot parse '" + s + "'");
    return v;
  };
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
    if (parts.size() != 3) throw ValidationError("z grid: expected a:b:step");
    const double a = number(parts[0]), b = number(parts[1]), step = number(parts[2]);
    if (!(step > 0.0) || b < a) throw ValidationError("z grid: need a <= b and step > 0");
    const auto count = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9));
    for (std::size_t k = 0; k <= count; ++k) out.push_back(a + static_cast<double>(k) * step);
  } else {
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, ',');) out.push_back(number(part));
  }
  if (out.empty()) throw ValidationError("z grid: empty");
  check_grid(out);
  return out;
}

}  // namespace steinmd
