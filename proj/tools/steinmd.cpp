// steinmd: bounds, Monte Carlo verification and exhaustive oracles for
// normal approximation of subgraph counts and locally dependent sums.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "steinmd/commands.hpp"
#include "steinmd/errors.hpp"
#include "steinmd/experiment.hpp"
#include "steinmd/version.hpp"

namespace {

using nlohmann::json;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> reps;
  std::optional<std::string> out;
  std::optional<std::string> z_grid;
  std::optional<double> d0;
  std::optional<int> threads;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "Experiment config (JSON)")->required();
  app->add_option("--seed", o.seed, "Master seed");
  app->add_option("--reps", o.reps, "Replications");
  app->add_option("--out", o.out, "Output directory");
  app->add_option("--z-grid", o.z_grid, "z grid as a:b:step or a,b,c");
  app->add_option("--d0", o.d0, "d0 > 0");
  app->add_option("--threads", o.threads, "Worker threads (never changes results)");
}

steinmd::ExperimentConfig load(const Overrides& o) {
  std::ifstream in(o.config);
  if (!in) throw steinmd::ValidationError("config: cannot open " + o.config);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& ex) {
    throw steinmd::ValidationError(std::string("config: ") + ex.what());
  }
  if (!j.is_object()) throw steinmd::ValidationError("config: top level must be an object");
  if (o.seed) j["seed"] = *o.seed;
  if (o.reps) j["reps"] = *o.reps;
  if (o.out) j["out"] = *o.out;
  if (o.z_grid) j["z_grid"] = *o.z_grid;
  if (o.d0) j["d0"] = *o.d0;
  if (o.threads) j["threads"] = *o.threads;
  return steinmd::parse_config(j);
}

int fail(int code, const char* kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Normal approximation bounds and Monte Carlo checks"};
  app.set_version_flag("--version", steinmd::kVersion);
  app.require_subcommand(1);

  Overrides o;
  std::string csv_path;
  bool drift = false;
  std::uint64_t cap = 1'000'000;
  bool quiet = false;

  auto* bounds = app.add_subcommand("bounds", "Evaluate bounds and validity ranges");
  add_common(bounds, o);
  bounds->add_option("--csv", csv_path, "Also write a long-format CSV");
  auto* verify = app.add_subcommand("verify", "Monte Carlo curves, overlays and assertions");
  add_common(verify, o);
  verify->add_flag("--quiet", quiet, "No progress on stderr");
  auto* pair = app.add_subcommand("pair-check", "Drift diagnostics of the exchangeable pair");
  add_common(pair, o);
  auto* enumerate = app.add_subcommand("enumerate", "List every copy of the pattern in K_N");
  add_common(enumerate, o);
  enumerate->add_option("--cap", cap, "Maximum number of copies");
  auto* oracle = app.add_subcommand("oracle", "Exhaustive small-N moments");
  add_common(oracle, o);
  oracle->add_flag("--drift", drift, "Also check the pair identities exactly");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : steinmd::kExitConfig;
  }

  try {
    const auto cfg = load(o);
    steinmd::CommandResult res;
    if (bounds->parsed()) {
      res = steinmd::cmd_bounds(cfg);
      if (!csv_path.empty()) {
        std::ofstream f(csv_path);
        if (!f) throw steinmd::ResourceError("cannot write " + csv_path);
        steinmd::write_bounds_csv(f, res.report);
      }
    } else if (verify->parsed()) {
      res = steinmd::cmd_verify(cfg, quiet ? nullptr : &std::cerr);
    } else if (pair->parsed()) {
      res = steinmd::cmd_pair_check(cfg);
    } else if (enumerate->parsed()) {
      res = steinmd::cmd_enumerate(cfg, cap);
    } else {
      res = steinmd::cmd_oracle(cfg, drift);
    }
    std::cout << res.report.dump(2) << '\n';
    return res.exit_code;
  } catch (const steinmd::ResourceError& e) {
    return fail(steinmd::kExitResource, "resource", e.what());
  } catch (const steinmd::CapabilityError& e) {
    return fail(steinmd::kExitConfig, "capability", e.what());
  } catch (const std::invalid_argument& e) {
    return fail(steinmd::kExitConfig, "validation", e.what());
  } catch (const std::domain_error& e) {
    return fail(steinmd::kExitConfig, "domain", e.what());
  } catch (const std::out_of_range& e) {
    return fail(steinmd::kExitConfig, "range", e.what());
  } catch (const std::bad_alloc&) {
    return fail(steinmd::kExitResource, "resource", "out of memory");
  } catch (const std::exception& e) {
    return fail(steinmd::kExitResource, "internal", e.what());
  }
}
