#include "steinmd/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "steinmd/errors.hpp"
#include "steinmd/mc_engine.hpp"
#include "steinmd/normal_kernel.hpp"
#include "steinmd/oracle.hpp"
#include "steinmd/version.hpp"

namespace steinmd {
namespace {

using nlohmann::json;

json header(const char* command, const ExperimentConfig& cfg) {
  return {{"command", command}, {"version", kVersion}, {"config", cfg.resolved}};
}

json invalid_point(double z, const std::string& why) {
  return {{"bound", nullptr}, {"valid", false}, {"reason", why}, {"z", z}, {"rate_only", false}, {"regime", nullptr}};
}

struct Assertions {
  json list = json::array();
  bool all_pass = true;

  void add(const std::string& name, bool pass, json detail) {
    detail["name"] = name;
    detail["pass"] = pass;
    list.push_back(std::move(detail));
    all_pass = all_pass && pass;
  }
};

// Local-field quantities shared by bounds and verify.
struct LocalSummary {
  json info;
  double r = 0.0;
  bool bounded = false;
  double delta = 0.0;
  LocalCalibration cal;
  GammaMoments gammas;
};

LocalSummary summarize_local(const ExperimentConfig& cfg) {
  const auto& gen = *cfg.generator;
  const auto& s = *cfg.structure;
  LocalSummary out;
  const std::vector<double> m4(gen.n(), gen.abs_moment(4));
  out.r = r_statistic(s, m4);
  out.info = {{"n", gen.n()}, {"structure", s.to_json()}, {"r", out.r}, {"local_be", local_be(out.r)}};
  out.bounded = gen.bounded();
  if (!out.bounded) {
    out.info["note"] = "unbounded base: kappa-calibrated bounds are not available";
    return out;
  }
  out.delta = gen.bound();
  out.cal = calibrate_bounded(s, out.delta, cfg.envelope_rule);
  const auto law = gen.abs_support();
  out.gammas = gamma_from_support(law, out.cal.envelope);
  double ld4 = 0.0;
  for (auto [v, pr] : law) ld4 += pr * std::exp(out.cal.alpha * (v + out.cal.envelope));
  out.info["delta"] = out.delta;
  out.info["calibration"] = {{"rule", cfg.envelope_rule == EnvelopeRule::quoted ? "quoted" : "tight"},
                             {"U", out.cal.envelope},
                             {"alpha", out.cal.alpha},
                             {"beta", out.cal.beta},
                             {"ld4_mgf", ld4},
                             {"ld4_holds", ld4 <= out.cal.beta}};
  return out;
}

json local_points(const ExperimentConfig& cfg, const LocalSummary& ls, double z) {
  json pt{{"z", z}};
  if (!ls.bounded) return pt;
  const auto& s = *cfg.structure;
  pt["bounded_local_md"] = bounded_local_md(static_cast<int>(s.n()), ls.delta, s.kappas(), z).to_json();
  if (z > ls.cal.alpha) {
    pt["local_md"] = invalid_point(z, "z exceeds alpha");
    return pt;
  }
  const auto gv = gamma_functionals(s, ls.gammas, ls.cal.beta, z, ls.cal.alpha);
  auto rep = local_md(gv, ls.cal.beta, z, cfg.d0, ls.cal.alpha);
  const double b = ls.cal.beta;
  const double t4 = std::pow(b, 2.5) * std::sqrt(gv.gamma4), t3 = std::pow(b, 6) * gv.gamma3 * z,
               t6 = std::pow(b, 3) * std::sqrt(gv.gamma6) * z;
  rep.details["terms"] = {{"gamma4_term", t4}, {"gamma3_term", t3}, {"gamma6_term", t6}};
  if (t6 > t4 + t3) rep.details["note"] = "the Gamma_6 term dominates E(z)";
  pt["local_md"] = rep.to_json();
  pt["gammas"] = {{"gamma3", gv.gamma3}, {"gamma4", gv.gamma4}, {"gamma6", gv.gamma6}};
  return pt;
}

json subgraph_model(const ExperimentConfig& cfg, const SubgraphMoments& m) {
  return {{"N", cfg.N},       {"p", cfg.p},         {"pattern", cfg.pattern->to_string()},
          {"copies", m.copy_count}, {"mean", m.mean}, {"variance", m.variance},
          {"psi", m.psi},     {"lambda", 1.0 / m.copy_count}};
}

json subgraph_point(const ExperimentConfig& cfg, double z) {
  json pt{{"z", z}, {"subgraph", subgraph_bounds(cfg.N, cfg.p, *cfg.pattern, z, cfg.half_rule).to_json()}};
  if (cfg.pattern->is_triangle()) pt["triangle"] = triangle_regimes(cfg.N, cfg.p, z).to_json();
  return pt;
}

json generic_point(const ExperimentConfig& cfg, double z) {
  json pt{{"z", z}, {"md_exchangeable", md_exchangeable(*cfg.envelope, cfg.d0, z).to_json()}};
  if (z <= cfg.envelope->A) {
    const auto m = mgf_bound(*cfg.envelope, z, cfg.d0);
    pt["mgf"] = {{"raw", m.raw}, {"simplified", m.simplified}, {"simplified_valid", m.simplified_valid}};
  }
  return pt;
}

// Regression of D on W and E[D Delta] from `draws` pair draws.
void pair_assertions(const Model& model, std::uint64_t draws, int threads, Assertions& out, json& summary) {
  const auto pairs = parallel_map<PairDraw>(draws, threads, [&](std::uint64_t rep) { return model.draw_pair(rep); });
  std::vector<double> w, d, dd;
  w.reserve(pairs.size());
  for (const auto& p : pairs) {
    w.push_back(p.w);
    d.push_back(p.d);
    dd.push_back(p.d * p.delta);
  }
  const double lambda = model.lambda();
  const auto fit = linear_fit(w, d);
  const auto edd = mean_estimate(dd);
  summary = {{"draws", draws},
             {"lambda", lambda},
             {"slope", fit.slope},
             {"slope_se", fit.se_slope_robust},
             {"intercept", fit.intercept},
             {"intercept_se", fit.se_intercept_robust},
             {"E[D_Delta]", edd.mean},
             {"E[D_Delta]_se", edd.se},
             {"two_lambda", 2.0 * lambda}};
  out.add("pair_slope_equals_lambda", std::abs(fit.slope - lambda) <= 3.0 * fit.se_slope_robust,
          {{"value", fit.slope}, {"target", lambda}, {"se", fit.se_slope_robust}, {"tolerance_se", 3}});
  out.add("pair_intercept_zero", std::abs(fit.intercept) <= 3.0 * fit.se_intercept_robust,
          {{"value", fit.intercept}, {"target", 0.0}, {"se", fit.se_intercept_robust}, {"tolerance_se", 3}});
  out.add("pair_E_D_Delta_equals_two_lambda", std::abs(edd.mean - 2.0 * lambda) <= 4.0 * edd.se,
          {{"value", edd.mean}, {"target", 2.0 * lambda}, {"se", edd.se}, {"tolerance_se", 4}});
}

// Ratio CI (at a Bonferroni-adjusted level) must meet [1 - bound, 1 + bound]
// wherever the explicit-constant bound is valid.
void ratio_domination(const std::string& name, const TailCurve& tail, const std::vector<json>& bounds,
                      double family_level, Assertions& out) {
  std::size_t checked = 0;
  for (const auto& b : bounds)
    if (b.value("valid", false) && b["bound"].is_number()) ++checked;
  if (checked == 0) return;
  const double level = 1.0 - (1.0 - family_level) / static_cast<double>(checked);
  json points = json::array();
  bool pass = true;
  for (std::size_t k = 0; k < tail.z_grid.size(); ++k) {
    const auto& b = bounds[k];
    if (!b.value("valid", false) || !b["bound"].is_number()) continue;
    const double q = std_normal_tail(tail.z_grid[k]);
    const auto [lo, hi] = clopper_pearson(tail.counts[k], tail.R, level);
    const double bound = b["bound"].get<double>();
    const bool ok = lo / q <= 1.0 + bound && hi / q >= 1.0 - bound;
    pass = pass && ok;
    points.push_back({{"z", tail.z_grid[k]}, {"ratio_ci", {lo / q, hi / q}}, {"bound", bound}, {"pass", ok}});
  }
  out.add(name, pass, {{"points", points}, {"family_level", family_level}});
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ResourceError("cannot write " + path.string());
  f << text;
  if (!f) throw ResourceError("failed writing " + path.string());
}

}  // namespace

CommandResult cmd_bounds(const ExperimentConfig& cfg) {
  CommandResult res;
  json r = header("bounds", cfg);
  json points = json::array();
  switch (cfg.kind) {
    case ExperimentKind::subgraph: {
      const auto m = exact_moments(cfg.N, cfg.p, *cfg.pattern);
      r["model"] = subgraph_model(cfg, m);
      const auto be = subgraph_bounds(cfg.N, cfg.p, *cfg.pattern, 0.0, cfg.half_rule);
      r["be_rate"] = be.details["be_rate"];
      r["z_max"] = be.details["z_max"];
      if (cfg.pattern->is_triangle()) r["regime"] = *triangle_regimes(cfg.N, cfg.p, 0.0).regime;
      for (double z : cfg.z_grid) points.push_back(subgraph_point(cfg, z));
      break;
    }
    case ExperimentKind::local: {
      const auto ls = summarize_local(cfg);
      r["model"] = ls.info;
      r["generator"] = cfg.generator->to_json();
      for (double z : cfg.z_grid) points.push_back(local_points(cfg, ls, z));
      break;
    }
    case ExperimentKind::depgraph: {
      r["model"] = {{"B", cfg.B}, {"sigma", cfg.sigma}, {"n", cfg.n}, {"max_degree", cfg.max_degree}};
      r["be_rate"] = depgraph_bounds(cfg.B, cfg.sigma, cfg.n, cfg.max_degree, 0.0).details["be_rate"];
      if (cfg.generator) {
        const auto ls = summarize_local(cfg);
        r["local"] = ls.info;
      }
      for (double z : cfg.z_grid)
        points.push_back({{"z", z}, {"depgraph", depgraph_bounds(cfg.B, cfg.sigma, cfg.n, cfg.max_degree, z).to_json()}});
      break;
    }
    case ExperimentKind::generic_pair: {
      r["A0"] = a0_search(*cfg.envelope, cfg.d0);
      r["A"] = cfg.envelope->A;
      for (double z : cfg.z_grid) points.push_back(generic_point(cfg, z));
      break;
    }
  }
  r["points"] = points;
  res.report = std::move(r);
  return res;
}

CommandResult cmd_verify(const ExperimentConfig& cfg, std::ostream* progress) {
  auto note = [&](const std::string& msg) {
    if (progress) *progress << "[verify] " << msg << '\n' << std::flush;
  };
  if (cfg.reps == 0) throw ValidationError("config: verify needs reps > 0");
  const Model model(cfg);
  CommandResult res;
  json r = header("verify", cfg);
  Assertions asserts;
  json warnings = json::array();

  note("sampling " + std::to_string(cfg.reps) + " replications");
  auto samples = run_replications([&](std::uint64_t rep) { return model.w(rep); }, cfg.reps, cfg.threads);
  const auto tail = tail_curve(samples, cfg.z_grid, cfg.level);
  const auto ratio = ratio_curve(tail);
  std::sort(samples.begin(), samples.end());
  const double ks = ks_distance_sorted(samples);
  const double dkw = dkw_margin(samples.size(), 0.01);
  r["ks"] = {{"distance", ks}, {"dkw_margin_99", dkw}};
  if (insufficient_exceedances(cfg.reps, cfg.z_grid.back()))
    warnings.push_back({{"warning", "insufficient exceedances"},
                        {"z_max", cfg.z_grid.back()},
                        {"expected_count", static_cast<double>(cfg.reps) * std_normal_tail(cfg.z_grid.back())}});

  std::vector<json> overlays(cfg.z_grid.size(), json::object());
  std::vector<json> explicit_bounds(cfg.z_grid.size(), json::object());

  switch (cfg.kind) {
    case ExperimentKind::subgraph: {
      r["model"] = subgraph_model(cfg, model.er()->moments());
      for (std::size_t k = 0; k < cfg.z_grid.size(); ++k) overlays[k] = subgraph_point(cfg, cfg.z_grid[k]);
      break;
    }
    case ExperimentKind::local:
    case ExperimentKind::depgraph: {
      const auto ls = summarize_local(cfg);
      r["model"] = ls.info;
      const double be = local_be(ls.r);
      asserts.add("local_be_domination", ks + dkw <= be, {{"ks_plus_dkw", ks + dkw}, {"bound", be}});
      for (std::size_t k = 0; k < cfg.z_grid.size(); ++k) {
        overlays[k] = local_points(cfg, ls, cfg.z_grid[k]);
        if (overlays[k].contains("local_md")) explicit_bounds[k] = overlays[k]["local_md"];
        if (cfg.kind == ExperimentKind::depgraph)
          overlays[k]["depgraph"] =
              depgraph_bounds(cfg.B, cfg.sigma, cfg.n, cfg.max_degree, cfg.z_grid[k]).to_json();
      }
      ratio_domination("local_md_domination", tail, explicit_bounds, cfg.level, asserts);
      break;
    }
    case ExperimentKind::generic_pair: {
      r["A0"] = a0_search(*cfg.envelope, cfg.d0);
      for (std::size_t k = 0; k < cfg.z_grid.size(); ++k) {
        overlays[k] = generic_point(cfg, cfg.z_grid[k]);
        explicit_bounds[k] = overlays[k]["md_exchangeable"];
      }
      ratio_domination("md_exchangeable_domination", tail, explicit_bounds, cfg.level, asserts);
      break;
    }
  }

  if (model.has_pair() && cfg.pair_draws >= 3) {
    note("drawing " + std::to_string(cfg.pair_draws) + " exchangeable pairs");
    json summary;
    pair_assertions(model, cfg.pair_draws, cfg.threads, asserts, summary);
    r["pair"] = summary;
  }

  if (model.has_drift() && cfg.drift_reps >= 2) {
    note("conditional drift terms on " + std::to_string(cfg.drift_reps) + " replications");
    const auto terms = parallel_map<DriftTerms>(cfg.drift_reps, cfg.threads,
                                                [&](std::uint64_t rep) { return model.drift_terms(rep); });
    std::vector<double> s1, a1, a2, total;
    for (const auto& t : terms) {
      s1.push_back(t.s1);
      a1.push_back(std::abs(t.s1));
      a2.push_back(std::abs(t.s2));
      total.push_back(std::abs(t.s1) + std::abs(t.s2));
    }
    const auto m_s1 = mean_estimate(s1), m_a1 = mean_estimate(a1), m_a2 = mean_estimate(a2),
               m_tot = mean_estimate(total);
    const double bound = be_exchangeable(m_a1.mean, m_a2.mean, 0.0);
    r["drift"] = {{"reps", cfg.drift_reps},   {"E_s1", m_s1.mean},     {"E_s1_se", m_s1.se},
                  {"E_abs_s1", m_a1.mean},    {"E_abs_s1_se", m_a1.se}, {"E_abs_s2", m_a2.mean},
                  {"E_abs_s2_se", m_a2.se},   {"be_bound", bound},      {"be_bound_se", m_tot.se}};
    asserts.add("drift_s1_mean_zero", std::abs(m_s1.mean) <= 4.0 * m_s1.se,
                {{"value", m_s1.mean}, {"se", m_s1.se}, {"tolerance_se", 4}});
    asserts.add("be_exchangeable_domination", bound + 3.0 * m_tot.se >= ks + dkw,
                {{"bound", bound}, {"bound_se", m_tot.se}, {"ks_plus_dkw", ks + dkw}});
  }

  json points = json::array();
  const json curve = curve_to_json(tail, ratio);
  for (std::size_t k = 0; k < cfg.z_grid.size(); ++k) {
    json pt = curve["points"][k];
    for (auto& [key, val] : overlays[k].items())
      if (key != "z") pt[key] = val;
    points.push_back(std::move(pt));
  }
  r["R"] = cfg.reps;
  r["level"] = cfg.level;
  r["points"] = points;
  r["warnings"] = warnings;
  r["assertions"] = asserts.list;
  r["pass"] = asserts.all_pass;

  const std::filesystem::path dir(cfg.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ResourceError("cannot create output directory " + dir.string() + ": " + ec.message());
  std::ostringstream csv;
  write_curve_csv(csv, tail, ratio);
  write_text(dir / "curve.csv", csv.str());
  write_text(dir / "report.json", r.dump(2) + "\n");
  r["files"] = {(dir / "curve.csv").string(), (dir / "report.json").string()};
  note("wrote " + (dir / "curve.csv").string());

  res.exit_code = asserts.all_pass ? kExitPass : kExitFail;
  res.report = std::move(r);
  return res;
}

CommandResult cmd_pair_check(const ExperimentConfig& cfg) {
  if (cfg.kind != ExperimentKind::subgraph && cfg.kind != ExperimentKind::local)
    throw ValidationError("config: pair-check needs kind subgraph or local");
  const Model model(cfg);
  const std::uint64_t draws = cfg.pair_draws;
  if (draws < 3) throw ValidationError("config: pair-check needs at least 3 pair draws");
  json r = header("pair-check", cfg);
  Assertions asserts;
  json summary;
  pair_assertions(model, draws, cfg.threads, asserts, summary);
  r["pair"] = summary;
  r["assertions"] = asserts.list;
  r["pass"] = asserts.all_pass;
  return {asserts.all_pass ? kExitPass : kExitFail, std::move(r)};
}

CommandResult cmd_enumerate(const ExperimentConfig& cfg, std::uint64_t cap) {
  if (cfg.kind != ExperimentKind::subgraph) throw ValidationError("config: enumerate needs kind subgraph");
  const auto copies = enumerate_copies(cfg.N, *cfg.pattern, cap);
  json list = json::array();
  for (const auto& c : copies) {
    json edges = json::array();
    for (auto id : c.edge_ids) {
      const auto [a, b] = pair_from_index(id, cfg.N);
      edges.push_back({a, b});
    }
    list.push_back(std::move(edges));
  }
  json r = header("enumerate", cfg);
  r["count"] = copies.size();
  r["copy_count"] = copy_count(cfg.N, *cfg.pattern);
  r["copies"] = std::move(list);
  return {kExitPass, std::move(r)};
}

CommandResult cmd_oracle(const ExperimentConfig& cfg, bool with_drift) {
  if (cfg.kind != ExperimentKind::subgraph) throw ValidationError("config: oracle needs kind subgraph");
  const auto ex = exhaustive_moments(cfg.N, cfg.p, *cfg.pattern, with_drift);
  const auto cf = exact_moments(cfg.N, cfg.p, *cfg.pattern);
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
  json r = header("oracle", cfg);
  r["exhaustive"] = ex.to_json();
  r["closed_form"] = {{"copies", cf.copy_count}, {"mean", cf.mean}, {"variance", cf.variance}};
  Assertions asserts;
  asserts.add("mean_matches", rel(cf.mean, ex.mean) <= 1e-10, {{"relative_error", rel(cf.mean, ex.mean)}});
  asserts.add("variance_matches", rel(cf.variance, ex.variance) <= 1e-10,
              {{"relative_error", rel(cf.variance, ex.variance)}});
  if (with_drift) {
    asserts.add("conditional_drift_is_lambda_W", ex.drift_max_residual <= 1e-10,
                {{"max_residual", ex.drift_max_residual}});
    asserts.add("E_D_Delta_is_two_lambda", rel(ex.e_d_delta, ex.two_lambda) <= 1e-10,
                {{"relative_error", rel(ex.e_d_delta, ex.two_lambda)}});
  }
  r["assertions"] = asserts.list;
  r["pass"] = asserts.all_pass;
  return {asserts.all_pass ? kExitPass : kExitFail, std::move(r)};
}

void write_bounds_csv(std::ostream& os, const json& report) {
  os << "z,name,bound,valid,rate_only,regime\n";
  for (const auto& pt : report.at("points")) {
    for (const auto& [name, b] : pt.items()) {
      if (!b.is_object() || !b.contains("valid")) continue;
      os << pt.at("z").get<double>() << ',' << name << ',';
      if (b["bound"].is_number()) os << b["bound"].get<double>();
      os << ',' << (b["valid"].get<bool>() ? "true" : "false") << ','
         << (b.value("rate_only", false) ? "true" : "false") << ','
         << (b["regime"].is_string() ? b["regime"].get<std::string>() : "") << '\n';
    }
  }
}

}  // namespace steinmd
