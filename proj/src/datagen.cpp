#include "pqlwcr/datagen.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pqlwcr {

namespace {

void check_example(int example_id) {
  if (example_id < 1 || example_id > 4) {
    throw std::invalid_argument("unknown example id " + std::to_string(example_id));
  }
}

}  // namespace

void ScenarioConfig::validate() const {
  check_example(example_id);
  if (n == 0) throw std::invalid_argument("n must be at least 1");
  if (p == 0) throw std::invalid_argument("p must be at least 1");
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in [0, 1)");
  if (!(std::abs(rho_x) < 1.0)) throw std::invalid_argument("rho_x must satisfy |rho_x| < 1");
  if (!beta_star.empty() && beta_star.size() != p) {
    throw std::invalid_argument("beta_star length must equal p");
  }
}

Vector ScenarioConfig::resolved_beta_star() const {
  return beta_star.empty() ? default_beta_star(example_id, p) : beta_star;
}

SizeDistribution cluster_size_distribution(int example_id) {
  check_example(example_id);
  if (example_id == 1 || example_id == 3) return {{2, 4, 15}, {9.0 / 16, 3.0 / 8, 1.0 / 16}};
  return {{4, 6, 10}, {9.0 / 16, 3.0 / 8, 1.0 / 16}};
}

ModelFamily family_for_example(int example_id) {
  check_example(example_id);
  return (example_id == 1 || example_id == 3) ? ModelFamily::gaussian()
                                              : ModelFamily::binomial();
}

Vector default_beta_star(int example_id, std::size_t p) {
  check_example(example_id);
  const Vector head = (example_id == 1 || example_id == 3) ? Vector{2.0, -1.0, 1.5, -2.0}
                                                           : Vector{1.0, -0.9, 0.7};
  Vector beta(p, 0.0);
  for (std::size_t d = 0; d < std::min(p, head.size()); ++d) beta[d] = head[d];
  return beta;
}

bool has_informative_size(int example_id) {
  check_example(example_id);
  return example_id == 1 || example_id == 2;
}

std::vector<std::size_t> gen_cluster_sizes(int example_id, std::size_t n, Rng& rng) {
  const SizeDistribution dist = cluster_size_distribution(example_id);
  if (n == 0) throw std::invalid_argument("n must be at least 1");
  std::discrete_distribution<std::size_t> pick(dist.probs.begin(), dist.probs.end());
  std::vector<std::size_t> sizes(n);
  for (auto& s : sizes) s = dist.values[pick(rng)];
  return sizes;
}

Vector gen_ar_covariates(std::size_t total_obs, std::size_t p, double rho_x, Rng& rng) {
  if (!(std::abs(rho_x) < 1.0)) throw std::invalid_argument("rho_x must satisfy |rho_x| < 1");
  std::normal_distribution<double> normal;
  const double innovation = std::sqrt(1.0 - rho_x * rho_x);
  Vector x(total_obs * p);
  for (std::size_t r = 0; r < total_obs; ++r) {
    double* row = x.data() + r * p;
    row[0] = normal(rng);
    for (std::size_t a = 1; a < p; ++a) row[a] = rho_x * row[a - 1] + innovation * normal(rng);
  }
  return x;
}

Vector gen_exchangeable_normal(std::size_t M, double rho, Rng& rng) {
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in [0, 1)");
  std::normal_distribution<double> normal;
  const double shared = std::sqrt(rho) * normal(rng);
  const double own = std::sqrt(1.0 - rho);
  Vector eps(M);
  for (double& e : eps) e = shared + own * normal(rng);
  return eps;
}

double standard_normal_quantile(double prob) {
  if (prob <= 0.0) return -std::numeric_limits<double>::infinity();
  if (prob >= 1.0) return std::numeric_limits<double>::infinity();
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * prob);
}

std::vector<int> gen_correlated_binary(std::span<const double> marginal_probs, double rho,
                                       Rng& rng) {
  for (double prob : marginal_probs) {
    if (!(prob >= 0.0 && prob <= 1.0)) {
      throw std::invalid_argument("marginal probabilities must lie in [0, 1]");
    }
  }
  const Vector latent = gen_exchangeable_normal(marginal_probs.size(), rho, rng);
  std::vector<int> y(marginal_probs.size());
  for (std::size_t j = 0; j < y.size(); ++j) {
    y[j] = latent[j] <= standard_normal_quantile(marginal_probs[j]) ? 1 : 0;
  }
  return y;
}

GeneratedData gen_dataset(const ScenarioConfig& config, Rng& rng) {
  config.validate();
  const Vector beta = config.resolved_beta_star();
  const std::size_t p = config.p;
  std::vector<std::size_t> sizes = gen_cluster_sizes(config.example_id, config.n, rng);
  std::size_t total = 0;
  for (std::size_t s : sizes) total += s;
  Vector x = gen_ar_covariates(total, p, config.rho_x, rng);
  Vector y(total);

  const bool gaussian = family_for_example(config.example_id) == ModelFamily::gaussian();
  const double log_offset = std::log(15.0 / 16.0);
  std::size_t obs = 0;
  Vector probs;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const std::size_t m = sizes[i];
    double u = 1.0;
    if (config.example_id == 1) u = m <= 4 ? 1.0 : 0.0;
    if (config.example_id == 2) u = m <= config.ex2_u_max_size ? 1.0 : 0.0;

    if (gaussian) {
      const Vector eps = gen_exchangeable_normal(m, config.rho, rng);
      for (std::size_t j = 0; j < m; ++j) {
        double eta = 0.0;
        for (std::size_t d = 0; d < p; ++d) eta += x[(obs + j) * p + d] * beta[d];
        y[obs + j] = u * eta + eps[j];
      }
    } else {
      probs.assign(m, 0.0);
      for (std::size_t j = 0; j < m; ++j) {
        double eta = 0.0;
        for (std::size_t d = 0; d < p; ++d) eta += x[(obs + j) * p + d] * beta[d];
        double prob;
        if (config.example_id == 2) {
          // Mean as written; can exceed 1 when e^eta > 16, so clip to a probability.
          prob = u * std::exp(eta) / (1.0 + std::exp(eta + log_offset));
          if (!std::isfinite(prob)) prob = u * 16.0 / 15.0;
        } else {
          prob = 1.0 / (1.0 + std::exp(-eta));
        }
        probs[j] = std::clamp(prob, 0.0, 1.0);
      }
      const std::vector<int> bin = gen_correlated_binary(probs, config.rho, rng);
      for (std::size_t j = 0; j < m; ++j) y[obs + j] = bin[j];
    }
    obs += m;
  }

  IndexSet support;
  for (std::size_t d = 0; d < p; ++d) {
    if (beta[d] != 0.0) support.push_back(d);
  }
  return {Dataset(p, std::move(sizes), std::move(y), std::move(x)), beta, std::move(support)};
}

Vector marginal_beta_star(const ScenarioConfig& config) {
  config.validate();
  Vector beta = config.resolved_beta_star();
  if (config.example_id == 3) return beta;
  if (config.example_id != 1) {
    throw std::invalid_argument("marginal coefficient is closed-form only for Gaussian examples");
  }
  const SizeDistribution dist = cluster_size_distribution(1);
  double pass = 0.0;
  for (std::size_t k = 0; k < dist.values.size(); ++k) {
    if (dist.values[k] <= 4) pass += dist.probs[k];
  }
  for (double& b : beta) b *= pass;
  return beta;
}

}  // namespace pqlwcr
