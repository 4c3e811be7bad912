#pragma once

// Simulation designs with and without informative cluster size.
//
//   1: Gaussian, Y = U X'b + e, U = I(M <= 4), M in {2, 4, 15} w.p. (9/16, 3/8, 1/16)
//   2: binary, E(Y|X,M) = U e^{X'b} / (1 + e^{X'b + log(15/16)}), U = I(M <= 6),
//      M in {4, 6, 10} w.p. (9/16, 3/8, 1/16)
//   3: Gaussian, Y = X'b + e, sizes as in 1
//   4: binary, E(Y|X) = logistic(X'b), sizes as in 2
//
// Covariates are AR(1) normal rows; errors and latent binary variables are
// exchangeable normal within a cluster.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pqlwcr/common.hpp"
#include "pqlwcr/model.hpp"

namespace pqlwcr {

struct ScenarioConfig {
  int example_id = 1;
  std::size_t n = 200;
  std::size_t p = 50;
  double rho = 0.5;
  double rho_x = 0.4;
  Vector beta_star;  // empty selects the example's default
  std::uint64_t seed = 1;
  // Example 2 passes observations from clusters of size <= this bound.
  std::size_t ex2_u_max_size = 6;

  void validate() const;
  Vector resolved_beta_star() const;
};

struct SizeDistribution {
  std::vector<std::size_t> values;
  Vector probs;
};

SizeDistribution cluster_size_distribution(int example_id);
ModelFamily family_for_example(int example_id);
Vector default_beta_star(int example_id, std::size_t p);
bool has_informative_size(int example_id);

std::vector<std::size_t> gen_cluster_sizes(int example_id, std::size_t n, Rng& rng);

// Row-major total_obs x p block; each row N(0, Sigma) with Sigma_ab = rho_x^|a-b|.
Vector gen_ar_covariates(std::size_t total_obs, std::size_t p, double rho_x, Rng& rng);

// M jointly normal, unit variance, pairwise correlation rho.
Vector gen_exchangeable_normal(std::size_t M, double rho, Rng& rng);

// Y_j = I(L_j <= Phi^{-1}(p_j)) with L exchangeable standard normal (latent rho).
std::vector<int> gen_correlated_binary(std::span<const double> marginal_probs, double rho,
                                       Rng& rng);

struct GeneratedData {
  Dataset data;
  Vector beta_star;
  IndexSet support;
};

GeneratedData gen_dataset(const ScenarioConfig& config, Rng& rng);

// Coefficient of the cluster-level marginal mean E(Y_{i z_i} | X) that a
// resampled fit estimates. Gaussian examples only; for Example 1 this is
// P(M <= 4) * beta = (15/16) beta.
Vector marginal_beta_star(const ScenarioConfig& config);

double standard_normal_quantile(double prob);

}  // namespace pqlwcr
