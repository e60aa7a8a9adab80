#include "steinmd/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

#include "steinmd/errors.hpp"
#include "steinmd/mc_engine.hpp"
#include "steinmd/rng.hpp"

namespace steinmd {
namespace {

using nlohmann::json;

const std::set<std::string> kKnownKeys = {
    "kind",    "reps",     "seed",       "z_grid",     "d0",        "level",     "threads",
    "out",     "pair_draws", "drift_reps", "N",        "p",         "pattern",   "half_rule",
    "generator", "structure", "envelope_rule", "B",     "sigma",     "n",         "max_degree",
    "sampler", "envelope"};

[[noreturn]] void bad(const std::string& what) { throw ValidationError("config: " + what); }

std::uint64_t get_count(const json& j, const char* key, std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    if (v.get<std::int64_t>() < 0) bad(std::string(key) + " must be nonnegative");
    return v.get<std::uint64_t>();
  }
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
  }
  bad(std::string(key) + " must be a nonnegative integer");
}

int get_int(const json& j, const char* key) {
  if (!j.contains(key)) bad(std::string("missing '") + key + "'");
  const auto& v = j.at(key);
  if (!v.is_number_integer()) bad(std::string(key) + " must be an integer");
  return v.get<int>();
}

double get_real(const json& j, const char* key, std::optional<double> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    bad(std::string("missing '") + key + "'");
  }
  const auto& v = j.at(key);
  if (!v.is_number()) bad(std::string(key) + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) bad(std::string(key) + " must be finite");
  return d;
}

std::vector<double> grid_from_json(const json& v) {
  if (v.is_string()) return parse_z_grid(v.get<std::string>());
  if (!v.is_array() || v.empty()) bad("z_grid must be \"a:b:step\" or a nonempty array");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) bad("z_grid entries must be numbers");
    out.push_back(x.get<double>());
  }
  if (!std::is_sorted(out.begin(), out.end())) bad("z_grid must be sorted");
  return out;
}

MonotoneTable table_from_json(const json& v, double A) {
  if (v.is_number()) return MonotoneTable::constant(v.get<double>(), A);
  if (v.is_object() && v.contains("knots") && v.contains("values"))
    return MonotoneTable(v.at("knots").get<std::vector<double>>(), v.at("values").get<std::vector<double>>());
  bad("envelope tables must be a number or {\"knots\": [...], \"values\": [...]}");
}

}  // namespace

std::string kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::subgraph: return "subgraph";
    case ExperimentKind::local: return "local";
    case ExperimentKind::depgraph: return "depgraph";
    case ExperimentKind::generic_pair: return "generic_pair";
  }
  return "?";
}

std::string default_out_dir() {
  if (const char* env = std::getenv("STEINMD_OUT_DIR"); env && *env) return env;
  return "steinmd-out";
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) bad("top level must be an object");
  for (const auto& [key, _] : j.items())
    if (!kKnownKeys.count(key)) bad("unknown key '" + key + "'");
  ExperimentConfig c;
  json r = j;
  try {
    if (!j.contains("kind") || !j.at("kind").is_string()) bad("'kind' must be one of subgraph, local, depgraph, generic_pair");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "subgraph")
      c.kind = ExperimentKind::subgraph;
    else if (kind == "local")
      c.kind = ExperimentKind::local;
    else if (kind == "depgraph")
      c.kind = ExperimentKind::depgraph;
    else if (kind == "generic_pair")
      c.kind = ExperimentKind::generic_pair;
    else
      bad("unknown kind '" + kind + "'");

    c.reps = get_count(j, "reps", c.reps);
    c.seed = get_count(j, "seed", c.seed);
    c.z_grid_explicit = j.contains("z_grid");
    c.z_grid = c.z_grid_explicit ? grid_from_json(j.at("z_grid")) : parse_z_grid("0:3:0.25");
    c.d0 = get_real(j, "d0", 1.0);
    if (!(c.d0 > 0.0)) bad("d0 must be positive");
    c.level = get_real(j, "level", 0.95);
    if (!(c.level > 0.0 && c.level < 1.0)) bad("level must lie in (0, 1)");
    const auto threads = get_count(j, "threads", 1);
    if (threads < 1 || threads > 1024) bad("threads must lie in [1, 1024]");
    c.threads = static_cast<int>(threads);
    c.out = j.value("out", default_out_dir());
    c.pair_draws = get_count(j, "pair_draws", std::min<std::uint64_t>(c.reps, 100000));
    c.drift_reps = get_count(j, "drift_reps", std::min<std::uint64_t>(c.reps, 20000));

    switch (c.kind) {
      case ExperimentKind::subgraph: {
        c.N = get_int(j, "N");
        c.p = get_real(j, "p");
        if (!(c.p > 0.0 && c.p < 1.0)) throw DomainError("config: p must lie in (0, 1)");
        c.pattern = j.contains("pattern") ? pattern_from_json(j.at("pattern")) : parse_pattern("triangle");
        if (c.N < c.pattern->vertex_count()) bad("N is smaller than the pattern");
        if (c.N > 4096) bad("N above 4096 is not supported");
        const std::string half = j.value("half_rule", std::string("inclusive"));
        if (half == "inclusive")
          c.half_rule = HalfRule::inclusive;
        else if (half == "exclusive")
          c.half_rule = HalfRule::exclusive;
        else
          bad("half_rule must be inclusive or exclusive");
        r["pattern"] = c.pattern->to_string();
        r["half_rule"] = half;
        if (!c.z_grid_explicit) {
          // Validity frontiers inside the default window are added as grid points.
          std::vector<double> extra{subgraph_bounds(c.N, c.p, *c.pattern, 0.0, c.half_rule).details["z_max"].get<double>()};
          if (c.pattern->is_triangle())
            extra.push_back(triangle_regimes(c.N, c.p, 0.0).details["z_max"].get<double>());
          for (double z : extra)
            if (z > 0.0 && z < c.z_grid.back()) c.z_grid.push_back(z);
          std::sort(c.z_grid.begin(), c.z_grid.end());
          c.z_grid.erase(std::unique(c.z_grid.begin(), c.z_grid.end()), c.z_grid.end());
        }
        break;
      }
      case ExperimentKind::local:
      case ExperimentKind::depgraph: {
        const std::string rule = j.value("envelope_rule", std::string("quoted"));
        if (rule == "quoted")
          c.envelope_rule = EnvelopeRule::quoted;
        else if (rule == "tight")
          c.envelope_rule = EnvelopeRule::tight;
        else
          bad("envelope_rule must be quoted or tight");
        r["envelope_rule"] = rule;
        if (j.contains("structure")) c.structure = structure_from_json(j.at("structure"));
        if (j.contains("generator")) {
          c.generator = generator_from_json(j.at("generator"), j.value("structure", json::object()));
          if (!c.structure) c.structure = c.generator->natural_structure();
          check_compatible(*c.generator, *c.structure);
          r["generator"] = c.generator->to_json();
          r["structure"] = c.structure->to_json();
        } else if (c.kind == ExperimentKind::local) {
          bad("local experiments need a 'generator'");
        }
        if (c.kind == ExperimentKind::depgraph) {
          if (c.generator) {
            if (!c.generator->bounded()) bad("depgraph needs a bounded (rademacher) generator");
            c.B = c.generator->bound() * c.generator->raw_sigma();
            c.sigma = c.generator->raw_sigma();
            c.n = static_cast<int>(c.generator->n());
            c.max_degree = c.structure->max_degree();
          } else {
            c.B = get_real(j, "B");
            c.sigma = get_real(j, "sigma");
            c.n = get_int(j, "n");
            c.max_degree = get_int(j, "max_degree");
            if (!(c.B > 0.0) || !(c.sigma > 0.0)) throw DomainError("config: B and sigma must be positive");
            if (c.n < 1 || c.max_degree < 0) bad("n must be positive and max_degree nonnegative");
          }
          r["B"] = c.B;
          r["sigma"] = c.sigma;
          r["n"] = c.n;
          r["max_degree"] = c.max_degree;
        }
        break;
      }
      case ExperimentKind::generic_pair: {
        c.sampler = j.value("sampler", std::string("normal"));
        if (c.sampler != "normal") bad("generic_pair supports sampler \"normal\" only");
        const json env = j.value("envelope", json{{"A", std::max(1.0, c.z_grid.back())}});
        const double A = get_real(env, "A");
        c.envelope = DeltaEnvelope(A, table_from_json(env.value("delta1", json(0.0)), A),
                                   table_from_json(env.value("delta2", json(0.0)), A),
                                   table_from_json(env.value("delta3", json(0.0)), A));
        r["sampler"] = c.sampler;
        r["envelope"] = env;
        break;
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    bad(ex.what());
  }
  r["reps"] = c.reps;
  r["seed"] = c.seed;
  r["z_grid"] = c.z_grid;
  r["d0"] = c.d0;
  r["level"] = c.level;
  r["threads"] = c.threads;
  r["out"] = c.out;
  r["pair_draws"] = c.pair_draws;
  r["drift_reps"] = c.drift_reps;
  c.resolved = std::move(r);
  return c;
}

Model::Model(const ExperimentConfig& cfg) : seed_(cfg.seed) {
  switch (cfg.kind) {
    case ExperimentKind::subgraph:
      er_ = std::make_shared<ErExperiment>(cfg.N, cfg.p, *cfg.pattern, cfg.seed);
      break;
    case ExperimentKind::local:
    case ExperimentKind::depgraph:
      if (!cfg.generator) throw ValidationError("config: sampling needs a 'generator'");
      local_ = std::make_shared<LocalExperiment>(*cfg.generator, *cfg.structure, cfg.seed);
      break;
    case ExperimentKind::generic_pair:
      break;
  }
}

double Model::w(std::uint64_t replication) const {
  if (er_) return er_->w(replication);
  if (local_) return local_->w(replication);
  auto gen = make_stream(seed_, replication, StreamTag::oracle);
  return standard_normal(gen);
}

PairDraw Model::draw_pair(std::uint64_t replication) const {
  if (er_) return er_->draw_pair(replication);
  if (local_) return local_->draw_pair(replication);
  throw CapabilityError("this experiment kind has no exchangeable pair");
}

double Model::lambda() const {
  if (er_) return er_->lambda();
  if (local_) return local_->lambda();
  throw CapabilityError("this experiment kind has no exchangeable pair");
}

bool Model::has_drift() const {
  if (er_) return true;
  return local_ && local_->generator().bounded();
}

DriftTerms Model::drift_terms(std::uint64_t replication) const {
  if (er_) return er_->drift_terms(replication);
  if (local_) return local_->drift_terms(replication);
  throw CapabilityError("this experiment kind has no drift terms");
}

}  // namespace steinmd
