#pragma once

// Replicated simulation studies and their TP / FP / CR / MSE summaries.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "pqlwcr/common.hpp"
#include "pqlwcr/datagen.hpp"
#include "pqlwcr/solver.hpp"

namespace pqlwcr {

enum class Method { PqlWcr, NaiveLasso };

std::string_view method_name(Method method);
Method parse_method(std::string_view name);

struct ReplicateScore {
  std::size_t tp = 0;
  std::size_t fp = 0;
  bool covered = false;
  double sq_err = 0.0;
};

ReplicateScore score_replicate(std::span<const double> beta_hat, const IndexSet& support_hat,
                               std::span<const double> beta_star,
                               const IndexSet& support_star);

struct ReplicateRecord {
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  Vector beta_hat;
  IndexSet support;
  ReplicateScore score;
  std::size_t k_effective = 0;  // 1 for the naive baseline
  double seconds = 0.0;
};

struct MetricsReport {
  double tp_mean = 0.0, tp_sd = 0.0;
  double fp_mean = 0.0, fp_sd = 0.0;
  double cr = 0.0, cr_sd = 0.0;  // coverage rate and its sample sd
  double mse_mean = 0.0, mse_sd = 0.0;
  std::size_t replications = 0;
  double wall_time = 0.0;
};

// Means, sample standard deviations (0 when R = 1) and coverage rate.
MetricsReport summarize(std::span<const ReplicateRecord> records);

struct BenchOptions {
  std::size_t K = 100;
  SolverOptions solver;  // penalty kind is set per method
  std::size_t agg_grid_size = 30;
  unsigned threads = 1;
};

struct MethodEstimate {
  Vector beta_hat;
  IndexSet support;
  std::size_t k_effective = 1;
};

// PQL_WCR: run_wcr with SCAD, then tune_aggregation. Naive lasso: BIC-tuned L1
// fit on all pooled observations.
MethodEstimate run_method(const Dataset& data, ModelFamily family, Method method,
                          const BenchOptions& opts, std::uint64_t seed);

struct ReplicationRun {
  MetricsReport report;
  std::vector<ReplicateRecord> records;
};

// Replicate r uses seed derive_seed(master_seed, r); its dataset depends only on
// that seed, so both methods see the same data for a given master seed.
ReplicationRun run_replications(const ScenarioConfig& config, Method method, std::size_t R,
                                std::uint64_t master_seed, const BenchOptions& opts);

}  // namespace pqlwcr
