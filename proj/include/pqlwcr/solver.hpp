#pragma once

// Penalized quasi-likelihood maximization on a DatasetView.
//
// A SCAD fit starts from the weighted-L1 solution at the same lambda and then
// runs local linear approximation rounds: each round replaces p_lambda(|b_d|)
// by p'_lambda(|b_d^cur|) |b_d| and solves the weighted-L1 problem. Every
// weighted-L1 problem is solved by IRLS (a single step for the Gaussian
// family) with cyclic active-set coordinate descent on the quadratic
// surrogate; each coordinate update is a soft-threshold step.

#include <optional>
#include <span>

#include "pqlwcr/common.hpp"
#include "pqlwcr/model.hpp"
#include "pqlwcr/penalty.hpp"

namespace pqlwcr {

struct SolverOptions {
  PenaltyKind penalty = PenaltyKind::Scad;
  double scad_a = 3.7;
  int max_outer_iters = 3;  // LLA rounds after the L1 start
  int max_cd_passes = 200;  // per IRLS step
  int max_irls_iters = 25;
  double tol = 1e-6;        // on max |delta beta_d|
  double zero_tol = 1e-8;   // support detection
  Vector lambda_grid;       // strictly descending; empty selects the default path
  std::size_t grid_size = 50;
  double lambda_min_ratio = 0.01;
  // Leading coordinates excluded from the penalty (an intercept column).
  std::size_t unpenalized_leading = 0;
  double irls_weight_floor = 1e-6;

  void validate() const;
  PenaltySpec spec(double lambda) const;
};

struct FitResult {
  Vector beta;
  IndexSet support;
  double lambda = 0.0;
  double bic = 0.0;
  double objective = 0.0;
  bool converged = false;
  int iterations = 0;  // coordinate-descent passes, summed over all stages
  // Penalized objective after the L1 start and after each LLA round.
  Vector objective_trace;
  // Grid points skipped by tune_lambda because their fit diverged.
  std::size_t skipped_lambdas = 0;
};

// quasi_loglik(beta) minus the penalty over penalized coordinates.
double penalized_objective(const DatasetView& view, ModelFamily family,
                           const PenaltySpec& spec, std::span<const double> beta,
                           std::size_t unpenalized_leading = 0);

FitResult fit_penalized(const DatasetView& view, ModelFamily family, const PenaltySpec& spec,
                        const SolverOptions& opts,
                        std::optional<std::span<const double>> warm = std::nullopt);

// Largest violation of the first-order conditions of the penalized problem.
double kkt_violation(const DatasetView& view, ModelFamily family, const PenaltySpec& spec,
                     std::span<const double> beta, double zero_tol = 1e-8,
                     std::size_t unpenalized_leading = 0);

// -2 * sum_visible Q(Y, X'beta) + |support| * log(m), m = visible observations.
double bic_score(const DatasetView& view, ModelFamily family, std::span<const double> beta,
                 double zero_tol);

IndexSet support_of(std::span<const double> beta, double zero_tol);

// Log-spaced path from ||quasi_score(view, 0)||_inf down to ratio times that.
Vector default_lambda_grid(const DatasetView& view, ModelFamily family, std::size_t size,
                           double min_ratio, std::size_t unpenalized_leading = 0);

// Warm-started fits along the grid; returns the BIC minimizer, ties to larger lambda.
FitResult tune_lambda(const DatasetView& view, ModelFamily family, const SolverOptions& opts);

}  // namespace pqlwcr
