#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "steinmd/experiment.hpp"

namespace steinmd {

inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitResource = 3;

struct CommandResult {
  int exit_code = kExitPass;
  nlohmann::json report;
};

// Every applicable bound and validity range for the configured model.
CommandResult cmd_bounds(const ExperimentConfig& cfg);

// Monte Carlo curves with bound overlays. Writes <out>/curve.csv and
// <out>/report.json; exit 1 when any assertion fails.
CommandResult cmd_verify(const ExperimentConfig& cfg, std::ostream* progress = nullptr);

// Regression of D on W, and E[D Delta] against 2 lambda.
CommandResult cmd_pair_check(const ExperimentConfig& cfg);

// All copies of the pattern in K_N (subgraph configs only).
CommandResult cmd_enumerate(const ExperimentConfig& cfg, std::uint64_t cap = 1'000'000);

// Exhaustive small-N moments (and optionally the exact pair identities)
// compared with the closed forms.
CommandResult cmd_oracle(const ExperimentConfig& cfg, bool with_drift);

// Long-format CSV of a bounds report: z, name, bound, valid, rate_only, regime.
void write_bounds_csv(std::ostream& os, const nlohmann::json& report);

}  // namespace steinmd
