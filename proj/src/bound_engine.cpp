#include "steinmd/bound_engine.hpp"

#include <cmath>
#include <sstream>

#include "steinmd/errors.hpp"

namespace steinmd {
namespace {

void check_table(const MonotoneTable& t, double a, const char* name) {
  if (t.empty()) throw ValidationError(std::string("delta envelope: empty table ") + name);
  if (t.lower() > 0.0 || (t.upper() < a && t.knots().size() > 1))
    throw ValidationError(std::string("delta envelope: table ") + name + " must cover [0, A]");
  if (t(0.0) < 0.0) throw ValidationError(std::string("delta envelope: negative values in ") + name);
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

void invalidate(BoundReport& r, const std::string& why) {
  if (r.valid) {
    r.valid = false;
    r.reason = why;
  } else {
    r.reason += "; " + why;
  }
}

}  // namespace

DeltaEnvelope::DeltaEnvelope(double a, MonotoneTable t1, MonotoneTable t2, MonotoneTable t3)
    : A(a), d1(std::move(t1)), d2(std::move(t2)), d3(std::move(t3)) {
  if (!(A > 0.0) || !std::isfinite(A)) throw ValidationError("delta envelope: A must be positive");
  check_table(d1, A, "delta1");
  check_table(d2, A, "delta2");
  check_table(d3, A, "delta3");
}

DeltaEnvelope DeltaEnvelope::constant(double a, double c1, double c2, double c3) {
  return DeltaEnvelope(a, MonotoneTable::constant(c1, a), MonotoneTable::constant(c2, a),
                       MonotoneTable::constant(c3, a));
}

double DeltaEnvelope::penalty(double t) const { return 0.5 * t * t * (d1(t) + d2(t)) + d3(t) * t; }

nlohmann::json BoundReport::to_json() const {
  nlohmann::json j{{"bound", bound}, {"valid", valid},         {"reason", reason},
                   {"z", z},         {"rate_only", rate_only}, {"inputs", inputs}};
  j["regime"] = regime ? nlohmann::json(*regime) : nlohmann::json(nullptr);
  if (!details.empty()) j["details"] = details;
  return j;
}

double a0_search(const DeltaEnvelope& env, double d0) {
  if (!(d0 > 0.0)) throw DomainError("a0_search: d0 must be positive");
  if (env.penalty(0.0) > d0) throw DomainError("a0_search: penalty at 0 exceeds d0");
  if (env.penalty(env.A) <= d0) return env.A;
  double lo = 0.0, hi = env.A;
  const double tol = 1e-12 * env.A;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (env.penalty(mid) <= d0)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

BoundReport md_exchangeable(const DeltaEnvelope& env, double d0, double z) {
  if (!(z >= 0.0)) throw DomainError("md_exchangeable: z must be nonnegative");
  BoundReport r;
  r.z = z;
  r.inputs = {{"A", env.A}, {"d0", d0}, {"z", z}};
  const double a0 = a0_search(env, d0);
  r.bound = 20.0 * std::exp(d0) * ((1.0 + z * z) * (env.d1(z) + env.d2(z)) + (1.0 + z) * env.d3(z));
  r.details = {{"A0", a0}, {"delta1", env.d1(z)}, {"delta2", env.d2(z)}, {"delta3", env.d3(z)}};
  if (z > a0) invalidate(r, "z exceeds A0(d0) = " + fmt(a0));
  return r;
}

double be_exchangeable(double term1, double term2, double term3) {
  if (term1 < 0.0 || term2 < 0.0 || term3 < 0.0)
    throw DomainError("be_exchangeable: terms are absolute expectations and must be nonnegative");
  return term1 + term2 + term3;
}

BoundReport subgraph_bounds(int N, double p, const PatternGraph& g, double z, HalfRule rule) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("subgraph_bounds: p must lie in (0, 1)");
  if (!(z >= 0.0)) throw DomainError("subgraph_bounds: z must be nonnegative");
  BoundReport r;
  r.z = z;
  r.rate_only = true;
  r.inputs = {{"N", N}, {"p", p}, {"pattern", g.to_string()}, {"z", z},
              {"half_rule", rule == HalfRule::inclusive ? "inclusive" : "exclusive"}};
  const double ps = psi(N, p, g);
  const bool small = rule == HalfRule::inclusive ? p <= 0.5 : p < 0.5;
  const double q = 1.0 - p;
  const double be = small ? 1.0 / std::sqrt(ps) : 1.0 / (N * std::sqrt(q));
  const double b = small ? (1.0 + z) / std::sqrt(ps) : (1.0 + z / std::sqrt(q)) / (N * std::sqrt(q));
  const double z_max = q * double(N) * N * std::pow(p, g.edge_count()) / std::sqrt(ps);
  r.bound = (1.0 + z * z) * b;
  r.regime = small ? "small_p" : "large_p";
  r.details = {{"be_rate", be}, {"b_N", b}, {"psi", ps}, {"z_max", z_max}};
  if (z > z_max) invalidate(r, "z exceeds (1-p) N^2 p^e psi^{-1/2} = " + fmt(z_max));
  if (r.bound > 1.0) invalidate(r, "(1 + z^2) b_N(p, z) exceeds 1");
  return r;
}

BoundReport triangle_regimes(int N, double p, double z) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("triangle_regimes: p must lie in (0, 1)");
  if (!(z >= 0.0)) throw DomainError("triangle_regimes: z must be nonnegative");
  BoundReport r;
  r.z = z;
  r.rate_only = true;
  r.inputs = {{"N", N}, {"p", p}, {"z", z}};
  const double n = N;
  const double z3 = 1.0 + z * z * z;
  double be = 0.0, z_max = 0.0;
  if (p <= std::pow(n, -0.5)) {
    r.regime = "1";
    be = std::pow(n * p, -1.5);
    r.bound = be * z3;
    z_max = std::sqrt(n) * std::pow(p, 1.5);
  } else if (p <= std::pow(n, -2.0 / 7.0)) {
    r.regime = "2";
    be = 1.0 / (n * std::sqrt(p));
    r.bound = be * z3;
    z_max = n * std::pow(p, 2.5);
  } else if (p <= 0.5) {
    r.regime = "3";
    be = 1.0 / (n * std::sqrt(p));
    r.bound = be * z3;
    z_max = std::cbrt(n) * std::pow(p, 1.0 / 6.0);
  } else {
    r.regime = "4";
    const double s = 1.0 / std::sqrt(1.0 - p);
    be = s / n;
    r.bound = be * (1.0 + z * z) * (1.0 + s * z);
    z_max = std::cbrt(n * (1.0 - p));
  }
  r.details = {{"be_rate", be}, {"z_max", z_max}};
  if (z > z_max) invalidate(r, "z exceeds the regime range " + fmt(z_max));
  return r;
}

double local_be(double r) {
  if (!(r >= 0.0)) throw DomainError("local_be: r must be nonnegative");
  return 12.0 * std::sqrt(r);
}

BoundReport local_md(const GammaValues& gm, double beta, double z, double d0, double alpha) {
  if (!(z >= 0.0)) throw DomainError("local_md: z must be nonnegative");
  BoundReport r;
  r.z = z;
  r.inputs = {{"gamma3", gm.gamma3}, {"gamma4", gm.gamma4}, {"gamma6", gm.gamma6},
              {"beta", beta},        {"z", z},             {"d0", d0},
              {"alpha", alpha}};
  const double e = std::pow(beta, 2.5) * std::sqrt(gm.gamma4) + std::pow(beta, 6) * gm.gamma3 * z +
                   std::pow(beta, 3) * std::sqrt(gm.gamma6) * z;
  r.bound = 240.0 * std::exp(d0) * (1.0 + z * z) * e;
  r.details = {{"E", e}};
  if (z > alpha) invalidate(r, "z exceeds alpha = " + fmt(alpha));
  if (e * z * z > 2.0 * d0) invalidate(r, "E(z) z^2 exceeds 2 d0");
  return r;
}

BoundReport bounded_local_md(int n, double delta, const Kappas& k, double z) {
  if (!(delta > 0.0)) throw DomainError("bounded_local_md: delta must be positive");
  if (!(z >= 0.0)) throw DomainError("bounded_local_md: z must be nonnegative");
  BoundReport r;
  r.z = z;
  r.rate_only = true;
  r.inputs = {{"n", n}, {"delta", delta}, {"kappa1", k.k1}, {"kappa2", k.k2},
              {"kappa3", k.k3}, {"kappa4", k.k4}, {"z", z}};
  const double lead = k.k1 * std::sqrt(double(k.k2));
  const double brace = std::sqrt(double(n)) * delta * delta +
                       n * std::pow(delta, 3) * (std::sqrt(double(k.k2)) + std::sqrt(double(k.k3))) * z;
  r.bound = lead * brace * (1.0 + z * z);
  const double z_max = 1.0 / (delta * k.k1 * (1.0 + k.k4));
  r.details = {{"z_max", z_max}};
  if (z > z_max) invalidate(r, "z exceeds 1 / (delta kappa1 (1 + kappa4)) = " + fmt(z_max));
  if (lead * brace * (1.0 + z * z * z) > 1.0) invalidate(r, "kappa1 kappa2^{1/2} {...} (1 + z^3) exceeds 1");
  return r;
}

BoundReport depgraph_bounds(double B, double sigma, int n, int max_degree, double z) {
  if (!(B > 0.0) || !(sigma > 0.0)) throw DomainError("depgraph_bounds: B and sigma must be positive");
  if (!(z >= 0.0)) throw DomainError("depgraph_bounds: z must be nonnegative");
  BoundReport r;
  r.z = z;
  r.rate_only = true;
  r.inputs = {{"B", B}, {"sigma", sigma}, {"n", n}, {"max_degree", max_degree}, {"z", z}};
  const double d = max_degree;
  const double be = B * B / (sigma * sigma) * std::sqrt(double(n)) * std::pow(d, 1.5);
  r.bound = (be + std::pow(B / sigma, 3) * n * d * d * z) * (1.0 + z * z);
  r.details = {{"be_rate", be}};
  if (r.bound > 1.0) invalidate(r, "{...}(1 + z^2) exceeds 1");
  return r;
}

MgfBound mgf_bound(const DeltaEnvelope& env, double t, double d0) {
  if (!(t >= 0.0 && t <= env.A)) throw RangeError("mgf_bound: t must lie in [0, A]");
  MgfBound m;
  m.raw = std::exp(0.5 * t * t * (1.0 + env.d1(t) + env.d2(t)) + env.d3(t) * t);
  m.simplified = std::exp(d0 + 0.5 * t * t);
  m.simplified_valid = t <= a0_search(env, d0);
  return m;
}

}  // namespace steinmd
