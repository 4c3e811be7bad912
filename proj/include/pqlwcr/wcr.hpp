#pragma once

// Within-cluster resampling engine: K resampled penalized fits followed by
// penalized mean aggregation of the K coefficient vectors.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pqlwcr/common.hpp"
#include "pqlwcr/model.hpp"
#include "pqlwcr/solver.hpp"

namespace pqlwcr {

// Independent uniform draw of one observation per cluster.
ResampleIndex draw_resample(std::span<const std::size_t> cluster_sizes, Rng& rng);

struct WcrEnsemble {
  std::size_t K = 0;               // resamples requested
  std::vector<FitResult> fits;     // successful fits, ordered by resample index
  std::vector<std::size_t> ids;    // resample index k of each fit
  std::vector<std::uint64_t> seeds;  // per-fit RNG seed
  std::vector<ResampleIndex> resamples;
  std::vector<std::size_t> dropped;  // resample indices whose fit failed
  Vector componentwise_mean;

  std::size_t k_effective() const { return fits.size(); }
  Vector recompute_mean() const;
};

struct WcrOptions {
  SolverOptions solver;
  unsigned threads = 1;
  // Largest fraction of failed resample fits tolerated before run_wcr throws.
  double max_drop_fraction = 0.10;
};

std::uint64_t resample_seed(std::uint64_t master_seed, std::size_t k);

WcrEnsemble run_wcr(const Dataset& data, ModelFamily family, std::size_t K,
                    const WcrOptions& opts, std::uint64_t master_seed);

struct AggregateResult {
  Vector beta_hat;
  IndexSet support;
  Vector lambda_agg;           // per coordinate
  Vector selection_frequency;  // fraction of fits with a nonzero coefficient
  double score = 0.0;          // tuning criterion, when tuned
};

// argmin_b K^{-1} sum_k ||beta_k - b||^2 + sum_d lambda_d |b_d|, solved per
// coordinate as soft_threshold(mean_d, lambda_d / 2).
AggregateResult aggregate(const WcrEnsemble& ensemble, std::span<const double> lambda_agg);
AggregateResult aggregate(const WcrEnsemble& ensemble, double lambda_agg);

// Penalized-mean objective at b.
double aggregation_objective(const WcrEnsemble& ensemble, std::span<const double> lambda_agg,
                             std::span<const double> b);

// 30-point log grid over [0.01, 2] * sqrt(log p / n).
Vector default_aggregation_grid(std::size_t p, std::size_t n, std::size_t size = 30);

// Selects a uniform lambda from the grid by the average over stored resample
// views of -2 sum Q(beta_hat) + |S| log n; ties go to the larger lambda.
AggregateResult tune_aggregation(const WcrEnsemble& ensemble, const Dataset& data,
                                 ModelFamily family, std::span<const double> grid,
                                 std::size_t unpenalized_leading = 0);

IndexSet selected_set(std::span<const double> beta);

}  // namespace pqlwcr
