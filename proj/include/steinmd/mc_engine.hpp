#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

namespace steinmd {

// Evaluates f(0), ..., f(R - 1) on `threads` workers. Each worker owns a
// contiguous block of indices and writes only its own slots, so the result
// does not depend on the worker count.
template <class T, class F>
std::vector<T> parallel_map(std::size_t R, int threads, F f) {
  std::vector<T> out(R);
  const std::size_t workers = std::clamp<std::size_t>(threads < 1 ? 1 : threads, 1, std::max<std::size_t>(R, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < R; ++i) out[i] = f(static_cast<std::uint64_t>(i));
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (R + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        const std::size_t end = std::min(R, (w + 1) * chunk);
        for (std::size_t i = w * chunk; i < end; ++i) out[i] = f(static_cast<std::uint64_t>(i));
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

using Sampler = std::function<double(std::uint64_t replication)>;

std::vector<double> run_replications(const Sampler& sampler, std::size_t R, int threads = 1);

// Exceedance counts #{W > z} per grid point. Merging adds counts, so partial
// results from any partition of the replications combine to the same total.
struct TailCounts {
  std::vector<double> z_grid;
  std::vector<std::uint64_t> counts;
  std::uint64_t R = 0;

  void merge(const TailCounts& other);
};

TailCounts count_exceedances(std::span<const double> samples, std::vector<double> z_grid);

struct TailCurve {
  std::vector<double> z_grid;
  std::vector<std::uint64_t> counts;
  std::uint64_t R = 0;
  double level = 0.95;
  std::vector<double> estimates;
  std::vector<double> ci_low;
  std::vector<double> ci_high;
};

// Two-sided exact binomial interval for x successes in n trials.
std::pair<double, double> clopper_pearson(std::uint64_t x, std::uint64_t n, double level);

TailCurve tail_curve(const TailCounts& counts, double level = 0.95);
// Throws DomainError on empty samples, ValidationError on an unsorted grid.
TailCurve tail_curve(std::span<const double> samples, std::vector<double> z_grid, double level = 0.95);

struct RatioCurve {
  std::vector<double> z_grid;
  std::vector<double> normal_tail;
  std::vector<double> ratio;
  std::vector<double> ratio_ci_low;
  std::vector<double> ratio_ci_high;
  std::vector<bool> one_sided;  // no exceedances: only the upper limit is informative
};

RatioCurve ratio_curve(const TailCurve& tail);

// sup_z |F_R(z) - Phi(z)| for the empirical cdf of the samples.
double ks_distance(std::span<const double> samples);
double ks_distance_sorted(std::span<const double> sorted);

struct TwoSampleKs {
  double statistic = 0.0;
  double p_value = 1.0;  // asymptotic Kolmogorov approximation
};

TwoSampleKs two_sample_ks(std::span<const double> a, std::span<const double> b);

// DKW half-width sqrt(ln(2 / alpha) / (2 R)).
double dkw_margin(std::size_t R, double alpha = 0.01);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root mean squared residual in log space
};

// Least squares of log(distance) on log(N).
RateFit rate_regression(std::span<const std::pair<double, double>> points);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double se_slope = 0.0;
  double se_intercept = 0.0;
  // White (HC0) standard errors, valid when the noise variance depends on x.
  double se_slope_robust = 0.0;
  double se_intercept_robust = 0.0;
  std::size_t n = 0;
};

// Ordinary least squares y = a + b x with classical and robust standard errors.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

struct MeanEstimate {
  double mean = 0.0;
  double se = 0.0;
};

MeanEstimate mean_estimate(std::span<const double> values);

// True when R (1 - Phi(z_max)) < 20.
bool insufficient_exceedances(std::uint64_t R, double z_max);

// Columns: z, estimate, ci_low, ci_high, normal_tail, ratio, ratio_ci_low, ratio_ci_high.
void write_curve_csv(std::ostream& os, const TailCurve& tail, const RatioCurve& ratio);
nlohmann::json curve_to_json(const TailCurve& tail, const RatioCurve& ratio);

// "a:b:step" or a comma separated list; throws ValidationError.
std::vector<double> parse_z_grid(const std::string& text);

}  // namespace steinmd
