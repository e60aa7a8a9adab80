// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "brute.hpp"
#include "stein_grid.hpp"
#include "steinmd/bound_engine.hpp"
#include "steinmd/er_process.hpp"
#include "steinmd/graph_model.hpp"
#include "steinmd/local_field.hpp"
#include "steinmd/mc_engine.hpp"
#include "steinmd/normal_kernel.hpp"

using namespace steinmd;
namespace fs = std::filesystem;

namespace {

int failures = 0;
int threads = 1;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] %2d %-28s %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void criterion_1() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  bool spot = false;
  for (const char* name : {"edge", "2-path", "triangle", "4-cycle"}) {
    const auto g = parse_pattern(name);
    for (int N : {4, 5})
      for (double p : {0.1, 0.5, 0.83}) {
        const auto cf = exact_moments(N, p, g);
        const auto ex = brute::exhaustive(N, p, g);
        worst = std::max({worst, std::abs(cf.mean - ex.mean) / ex.mean,
                          std::abs(cf.variance - ex.variance) / ex.variance});
        if (N == 4 && p == 0.5 && g.is_triangle())
          spot = std::abs(cf.mean - 0.5) < 1e-12 && std::abs(cf.variance - 0.625) < 1e-12;
      }
  }
  const double secs = seconds_since(t0);
  report(1, "oracle equivalence", worst <= 1e-10 && spot && secs < 30,
         fmt("max rel err %.3g, triangle N=4 (0.5, 0.625) %s, %.1fs", worst, spot ? "ok" : "MISMATCH", secs));
}

void criterion_2() {
  const auto t0 = Clock::now();
  const ErExperiment ex(8, 0.4, parse_pattern("triangle"), 3);
  const auto pairs = parallel_map<PairDraw>(200000, threads, [&](std::uint64_t r) { return ex.draw_pair(r); });
  std::vector<double> w, d, dd;
  for (const auto& p : pairs) {
    w.push_back(p.w);
    d.push_back(p.d);
    dd.push_back(p.d * p.delta);
  }
  const auto fit = linear_fit(w, d);
  const auto e = mean_estimate(dd);
  const double lam = 1.0 / 56;
  const bool ok = std::abs(fit.slope - lam) <= 3 * fit.se_slope_robust &&
                  std::abs(fit.intercept) <= 3 * fit.se_intercept_robust &&
                  std::abs(e.mean - 2 * lam) <= 4 * e.se;
  const double secs = seconds_since(t0);
  report(2, "drift identity", ok && secs < 120,
         fmt("slope %.6f (1/56=%.6f, se %.2g), intercept %.2g (se %.2g), E[D Delta] %.6f (2/56=%.6f, se %.2g), %.1fs",
             fit.slope, lam, fit.se_slope_robust, fit.intercept, fit.se_intercept_robust, e.mean, 2 * lam, e.se, secs));
}

void criterion_3() {
  const auto t0 = Clock::now();
  const std::size_t R = 200000;
  const ErExperiment ex(20, 0.3, parse_pattern("triangle"), 7);
  auto w = run_replications([&](std::uint64_t r) { return ex.w(r); }, R, threads);
  std::sort(w.begin(), w.end());
  const double ks = ks_distance_sorted(w), dkw = dkw_margin(R, 0.01);
  const auto terms = parallel_map<DriftTerms>(R, threads, [&](std::uint64_t r) { return ex.drift_terms(r); });
  std::vector<double> literal, tight;
  for (const auto& t : terms) {
    literal.push_back(std::abs(t.s1) + 2 * std::abs(t.s2));
    tight.push_back(std::abs(t.s1) + std::abs(t.s2));
  }
  const auto lit = mean_estimate(literal), tig = mean_estimate(tight);
  const double secs = seconds_since(t0);
  report(3, "exchangeable-pair BE bound", lit.mean + 3 * lit.se >= ks + dkw && secs < 600,
         fmt("E|s1|+2E|s2| = %.4f (+3se %.4f) vs KS+DKW %.4f+%.4f; E|s1|+E|s2| = %.4f; %.1fs", lit.mean,
             3 * lit.se, ks, dkw, tig.mean, secs));
}

void criterion_4() {
  const auto t0 = Clock::now();
  const std::size_t R = 200000;
  const auto gen = FieldGenerator::moving_sum(2000, 1);
  const LocalExperiment ex(gen, gen.natural_structure(), 11);
  auto w = run_replications([&](std::uint64_t r) { return ex.w(r); }, R, threads);
  std::sort(w.begin(), w.end());
  const double ks = ks_distance_sorted(w), dkw = dkw_margin(R, 0.01);
  const double r = ex.r(), bound = local_be(r);
  const double secs = seconds_since(t0);
  report(4, "local BE domination", ks + dkw <= bound && secs < 300,
         fmt("KS %.4f + DKW %.4f <= 12 sqrt(r) = %.4f (r = %.5f), %.1fs", ks, dkw, bound, r, secs));
}

struct RatioRun {
  int N;
  double ks;
  std::vector<double> ratio, half_width;
};

std::vector<RatioRun> ratio_runs;

void criterion_5() {
  const auto t0 = Clock::now();
  const std::vector<double> grid = {0.5, 1.0, 1.5};
  for (int N : {15, 30, 60}) {
    const ErExperiment ex(N, 0.3, parse_pattern("triangle"), 21);
    auto w = run_replications([&](std::uint64_t r) { return ex.w(r); }, 1000000, threads);
    const auto rc = ratio_curve(tail_curve(w, grid, 0.95));
    std::sort(w.begin(), w.end());
    RatioRun run{N, ks_distance_sorted(w), rc.ratio, {}};
    for (std::size_t k = 0; k < grid.size(); ++k)
      run.half_width.push_back(0.5 * (rc.ratio_ci_high[k] - rc.ratio_ci_low[k]));
    ratio_runs.push_back(run);
  }
  const auto& small = ratio_runs.front();
  const auto& large = ratio_runs.back();
  bool ok = true;
  std::string detail;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double e15 = std::abs(small.ratio[k] - 1), e60 = std::abs(large.ratio[k] - 1);
    const double slack = small.half_width[k] + large.half_width[k];
    ok = ok && e60 <= e15 + slack && e60 <= 0.15;
    detail += fmt("z=%.1f |r-1| %.3f->%.3f; ", grid[k], e15, e60);
  }
  const double secs = seconds_since(t0);
  report(5, "ratio convergence", ok && secs < 1800, detail + fmt("%.1fs", secs));
}

void criterion_6() {
  std::vector<std::pair<double, double>> pts;
  std::string detail;
  for (const auto& r : ratio_runs) {
    pts.emplace_back(r.N, r.ks);
    detail += fmt("KS(N=%d) %.4f; ", r.N, r.ks);
  }
  if (pts.size() < 3) {
    report(6, "rate slope", false, "criterion 5 samples missing");
    return;
  }
  const auto fit = rate_regression(pts);
  report(6, "rate slope", fit.slope >= -1.4 && fit.slope <= -0.6, detail + fmt("slope %.3f", fit.slope));
}

void criterion_7() {
  const auto t0 = Clock::now();
  const auto g = run_stein_grid();
  const double secs = seconds_since(t0);
  const bool ok = g.max_fd_residual <= 1e-6 && g.max_abs_f <= 1.0 && g.wf_monotone && g.mills_ok && secs < 10;
  report(7, "Stein solution suite", ok,
         fmt("fd residual %.2g, sup|f| %.4f, w f monotone %s, Mills %s, %d points, %.2fs", g.max_fd_residual,
             g.max_abs_f, g.wf_monotone ? "yes" : "no", g.mills_ok ? "ok" : "violated", g.points, secs));
}

void criterion_8() {
  double worst = 0.0;
  auto check = [&](const DeltaEnvelope& env, double d0, double expect) {
    worst = std::max(worst, std::abs(a0_search(env, d0) - expect));
  };
  check(DeltaEnvelope::constant(5, 0.01, 0.01, 0), 1.0, 5.0);
  check(DeltaEnvelope::constant(5, 0.01, 0.01, 0), 0.09, 3.0);
  check(DeltaEnvelope::constant(5, 0, 0, 0), 0.5, 5.0);
  check(DeltaEnvelope::constant(10, 0.02, 0.02, 0.1), 0.5, (-0.1 + std::sqrt(0.01 + 0.04)) / 0.04);
  // delta_1 = delta_2 = b t gives b t^3; delta_3 = c t gives c t^2
  check(DeltaEnvelope(10, MonotoneTable::linear(0, 0.004, 10), MonotoneTable::linear(0, 0.004, 10),
                      MonotoneTable::constant(0, 10)),
        0.5, std::cbrt(0.5 / 0.004));
  check(DeltaEnvelope(10, MonotoneTable::constant(0, 10), MonotoneTable::constant(0, 10),
                      MonotoneTable::linear(0, 0.03, 10)),
        0.7, std::sqrt(0.7 / 0.03));
  const double md = md_exchangeable(DeltaEnvelope::constant(5, 0.001, 0.001, 0), 1.0, 1.0).bound;
  const double hand = 20 * std::exp(1.0) * 2 * 0.002;
  const bool ok = worst <= 1e-8 && std::abs(md - hand) <= 1e-6 && std::abs(md - 0.21746) <= 5e-6;
  report(8, "A0 and MD evaluator", ok,
         fmt("max |A0 - closed form| %.2g; MD %.8f vs 40e*0.002 = %.8f (quoted 0.21746)", worst, md, hand));
}

void criterion_9() {
  double worst = 0.0;
  const std::vector<std::vector<std::pair<double, double>>> laws = {
      {{0.1, 1.0}}, {{0.0, 0.25}, {0.2, 0.5}, {0.4, 0.25}}, {{0.05, 0.3}, {0.3, 0.7}}};
  for (const auto& law : laws)
    for (int n : {1, 17, 400}) {
      double m3 = 0, m4 = 0;
      for (auto [v, p] : law) {
        m3 += p * v * v * v;
        m4 += p * v * v * v * v;
      }
      const auto v = gamma_functionals(build_structure_m_dependent(n, 0), gamma_from_support(law, 0.0), 1.0, 0.0, 1.0);
      worst = std::max({worst, std::abs(v.gamma3 - 3 * n * m3) / (3 * n * m3),
                        std::abs(v.gamma4 - 4 * n * m4) / (4 * n * m4)});
    }
  bool monotone = true;
  for (const auto& gen : {FieldGenerator::moving_sum(200, 1), FieldGenerator::cycle_product(50)}) {
    const auto s = gen.natural_structure();
    const auto cal = calibrate_bounded(s, gen.bound());
    const auto gam = gamma_from_support(gen.abs_support(), cal.envelope);
    GammaValues prev{};
    for (int k = 0; k <= 4; ++k) {
      const auto v = gamma_functionals(s, gam, cal.beta, cal.alpha * k / 4, cal.alpha);
      monotone = monotone && v.gamma3 >= prev.gamma3 && v.gamma4 >= prev.gamma4 && v.gamma6 >= prev.gamma6;
      prev = v;
    }
  }
  report(9, "Gamma functionals", worst <= 1e-12 && monotone,
         fmt("max rel err vs 3n E|X|^3, 4n E|X|^4: %.2g; monotone in t: %s", worst, monotone ? "yes" : "no"));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_10() {
  const fs::path base = fs::temp_directory_path() / ("steinmd_acceptance_" + std::to_string(::getpid()));
  std::vector<std::string> csv;
  std::vector<int> codes;
  for (int t : {1, 8}) {
    const fs::path out = base / ("threads" + std::to_string(t));
    const std::string cmd = std::string("\"") + STEINMD_CLI + "\" verify --quiet --config \"" STEINMD_SOURCE_DIR
                            "/configs/triangle_verify.json\" --seed 99 --threads " + std::to_string(t) +
                            " --out \"" + out.string() + "\" > /dev/null";
    const int status = std::system(cmd.c_str());
    codes.push_back(WIFEXITED(status) ? WEXITSTATUS(status) : -1);
    csv.push_back(slurp(out / "curve.csv"));
  }
  std::error_code ec;
  fs::remove_all(base, ec);
  const bool ran = codes[0] >= 0 && codes[0] <= 1 && codes[1] >= 0 && codes[1] <= 1;
  const bool same = !csv[0].empty() && csv[0] == csv[1];
  report(10, "determinism", ran && same,
         fmt("curve.csv %zu bytes, identical at 1 and 8 threads: %s (exit codes %d, %d)", csv[0].size(),
             same ? "yes" : "no", codes[0], codes[1]));
}

}  // namespace

int main() {
  threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const auto t0 = Clock::now();
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  std::printf("%d of 10 criteria passed in %.1fs\n", 10 - failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
