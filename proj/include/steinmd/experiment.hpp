#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "steinmd/bound_engine.hpp"
#include "steinmd/er_process.hpp"
#include "steinmd/local_field.hpp"

namespace steinmd {

enum class ExperimentKind { subgraph, local, depgraph, generic_pair };

// A validated experiment description. `resolved` is the input JSON with every
// default filled in; it is what reports embed.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::subgraph;
  std::uint64_t reps = 100000;
  std::uint64_t seed = 1;
  std::vector<double> z_grid;
  bool z_grid_explicit = false;
  double d0 = 1.0;
  double level = 0.95;
  int threads = 1;
  std::string out;
  std::uint64_t pair_draws = 0;
  std::uint64_t drift_reps = 0;

  // subgraph
  int N = 0;
  double p = 0.0;
  std::optional<PatternGraph> pattern;
  HalfRule half_rule = HalfRule::inclusive;

  // local / depgraph
  std::optional<FieldGenerator> generator;
  std::optional<DependencyStructure> structure;
  EnvelopeRule envelope_rule = EnvelopeRule::quoted;

  // depgraph given by its constants only
  double B = 0.0;
  double sigma = 0.0;
  int n = 0;
  int max_degree = 0;

  // generic_pair
  std::string sampler;
  std::optional<DeltaEnvelope> envelope;

  nlohmann::json resolved;
};

// Throws ValidationError (or DomainError) for anything malformed.
ExperimentConfig parse_config(const nlohmann::json& j);

std::string kind_name(ExperimentKind k);

// Default output directory: $STEINMD_OUT_DIR if set, else "steinmd-out".
std::string default_out_dir();

// Uniform access to the statistic W and, where defined, the exchangeable pair.
class Model {
 public:
  explicit Model(const ExperimentConfig& cfg);

  double w(std::uint64_t replication) const;
  bool has_pair() const { return er_ || local_; }
  PairDraw draw_pair(std::uint64_t replication) const;
  double lambda() const;
  // Conditional drift terms; available for subgraph counts and for bounded
  // local fields.
  bool has_drift() const;
  DriftTerms drift_terms(std::uint64_t replication) const;

  const ErExperiment* er() const { return er_.get(); }
  const LocalExperiment* local() const { return local_.get(); }

 private:
  std::uint64_t seed_;
  std::shared_ptr<ErExperiment> er_;
  std::shared_ptr<LocalExperiment> local_;
};

}  // namespace steinmd
