#pragma once

// Helpers shared by the unit tests: random datasets and an OLS oracle that
// does not go through the solver.

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "pqlwcr/model.hpp"

namespace pqlwcr::testing {

inline Dataset random_dataset(std::size_t n, std::size_t p, std::size_t max_size,
                              ModelFamily family, std::uint64_t seed,
                              const Vector& beta = {}) {
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> size_dist(1, max_size);
  std::normal_distribution<double> normal;
  std::vector<std::size_t> sizes(n);
  std::size_t total = 0;
  for (auto& s : sizes) total += (s = size_dist(rng));
  Vector x(total * p), y(total);
  for (double& v : x) v = normal(rng);
  for (std::size_t obs = 0; obs < total; ++obs) {
    double eta = 0.0;
    for (std::size_t d = 0; d < beta.size(); ++d) eta += x[obs * p + d] * beta[d];
    if (family == ModelFamily::gaussian()) {
      y[obs] = eta + normal(rng);
    } else {
      std::bernoulli_distribution coin(1.0 / (1.0 + std::exp(-eta)));
      y[obs] = coin(rng) ? 1.0 : 0.0;
    }
  }
  return Dataset(p, std::move(sizes), std::move(y), std::move(x));
}

// Least squares on the visible observations via a QR solve.
inline Vector ols_oracle(const DatasetView& view) {
  const Dataset& data = view.base();
  const std::size_t m = view.num_visible();
  Eigen::MatrixXd X(m, data.dim());
  Eigen::VectorXd y(m);
  std::size_t r = 0;
  view.for_each_visible([&](std::size_t obs) {
    for (std::size_t d = 0; d < data.dim(); ++d) X(r, d) = data.row(obs)[d];
    y(r) = data.response(obs);
    ++r;
  });
  const Eigen::VectorXd b = X.colPivHouseholderQr().solve(y);
  return Vector(b.data(), b.data() + b.size());
}

inline double max_abs_diff(const Vector& a, const Vector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace pqlwcr::testing
