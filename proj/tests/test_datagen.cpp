#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "pqlwcr/datagen.hpp"
#include "test_support.hpp"

using namespace pqlwcr;

namespace {

struct Moments {
  double n = 0, sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  void add(double a, double b) {
    n += 1;
    sa += a;
    sb += b;
    saa += a * a;
    sbb += b * b;
    sab += a * b;
  }
  double corr() const {
    const double ca = saa / n - (sa / n) * (sa / n);
    const double cb = sbb / n - (sb / n) * (sb / n);
    return (sab / n - (sa / n) * (sb / n)) / std::sqrt(ca * cb);
  }
  double var_a() const { return saa / n - (sa / n) * (sa / n); }
};

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// P(L1 <= 0, L2 <= 0) for an exchangeable normal pair with correlation rho,
// integrating over the shared factor.
double orthant_probability(double rho) {
  const double s = std::sqrt(rho / (1.0 - rho));
  const double h = 1e-3;
  double total = 0.0;
  for (double u = -10.0; u <= 10.0; u += h) {
    const double phi = std::exp(-0.5 * u * u) / std::sqrt(2.0 * M_PI);
    const double c = normal_cdf(-s * u);
    total += phi * c * c * h;
  }
  return total;
}

double eta_of(const Dataset& data, std::size_t obs, const Vector& beta) {
  double eta = 0.0;
  const auto row = data.row(obs);
  for (std::size_t d = 0; d < beta.size(); ++d) eta += row[d] * beta[d];
  return eta;
}

}  // namespace

TEST_CASE("cluster size distributions") {
  Rng rng(1);
  const auto sizes = gen_cluster_sizes(1, 160000, rng);
  double two = 0, four = 0, fifteen = 0;
  for (auto s : sizes) {
    two += s == 2;
    four += s == 4;
    fifteen += s == 15;
  }
  CHECK(std::abs(two / 160000 - 9.0 / 16) < 0.01);
  CHECK(std::abs(four / 160000 - 3.0 / 8) < 0.01);
  CHECK(two + four + fifteen == 160000);

  for (int ex : {2, 4}) {
    for (auto s : gen_cluster_sizes(ex, 5000, rng)) CHECK((s == 4 || s == 6 || s == 10));
  }
  Rng a(9), b(9);
  CHECK(gen_cluster_sizes(3, 100, a) == gen_cluster_sizes(3, 100, b));
  CHECK_THROWS_AS(gen_cluster_sizes(5, 10, rng), std::invalid_argument);
  CHECK_THROWS_AS(gen_cluster_sizes(1, 0, rng), std::invalid_argument);

  for (int ex = 1; ex <= 4; ++ex) {
    double total = 0;
    for (double p : cluster_size_distribution(ex).probs) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("AR(1) covariates") {
  Rng rng(2);
  const std::size_t rows = 100000;
  const Vector x = gen_ar_covariates(rows, 3, 0.4, rng);
  Moments m13, m12;
  for (std::size_t r = 0; r < rows; ++r) {
    m13.add(x[r * 3], x[r * 3 + 2]);
    m12.add(x[r * 3], x[r * 3 + 1]);
  }
  CHECK(std::abs(m13.corr() - 0.16) < 0.02);
  CHECK(std::abs(m12.corr() - 0.4) < 0.02);
  CHECK(std::abs(m13.var_a() - 1.0) < 0.02);
  Moments last;
  for (std::size_t r = 0; r < rows; ++r) last.add(x[r * 3 + 2], 0.0);
  CHECK(std::abs(last.var_a() - 1.0) < 0.02);

  const Vector ind = gen_ar_covariates(rows, 3, 0.0, rng);
  Moments i12, i23;
  for (std::size_t r = 0; r < rows; ++r) {
    i12.add(ind[r * 3], ind[r * 3 + 1]);
    i23.add(ind[r * 3 + 1], ind[r * 3 + 2]);
  }
  CHECK(std::abs(i12.corr()) < 0.02);
  CHECK(std::abs(i23.corr()) < 0.02);
  CHECK_THROWS_AS(gen_ar_covariates(5, 3, 1.0, rng), std::invalid_argument);
}

TEST_CASE("exchangeable normal errors") {
  Rng rng(3);
  for (double rho : {0.0, 0.5, 0.8}) {
    Moments m;
    for (int k = 0; k < 100000; ++k) {
      const Vector e = gen_exchangeable_normal(2, rho, rng);
      m.add(e[0], e[1]);
    }
    CHECK(std::abs(m.corr() - rho) < 0.02);
    CHECK(std::abs(m.var_a() - 1.0) < 0.02);
  }
  CHECK_THROWS_AS(gen_exchangeable_normal(2, 1.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(gen_exchangeable_normal(2, -0.1, rng), std::invalid_argument);
}

TEST_CASE("correlated binary responses") {
  Rng rng(4);
  const Vector ones{1.0, 1.0, 1.0};
  for (int k = 0; k < 100; ++k) CHECK(gen_correlated_binary(ones, 0.5, rng) == std::vector<int>{1, 1, 1});
  const Vector zeros{0.0, 0.0};
  for (int k = 0; k < 100; ++k) CHECK(gen_correlated_binary(zeros, 0.5, rng) == std::vector<int>{0, 0});

  const Vector probs{0.3};
  double hits = 0;
  for (int k = 0; k < 100000; ++k) hits += gen_correlated_binary(probs, 0.0, rng)[0];
  CHECK(std::abs(hits / 100000 - 0.3) < 0.01);

  // Orthant oracle: P(both ones) at p = 0.5 and its implied binary correlation.
  const double both = orthant_probability(0.5);
  CHECK(both == doctest::Approx(1.0 / 3).epsilon(1e-8));
  const double implied = (both - 0.25) / 0.25;
  const Vector half{0.5, 0.5};
  Moments m;
  for (int k = 0; k < 100000; ++k) {
    const auto y = gen_correlated_binary(half, 0.5, rng);
    m.add(y[0], y[1]);
  }
  CHECK(std::abs(m.corr() - implied) < 0.02);
  CHECK(std::abs(m.corr() - 0.333) < 0.02);

  CHECK_THROWS_AS(gen_correlated_binary(Vector{1.5}, 0.5, rng), std::invalid_argument);
  CHECK_THROWS_AS(gen_correlated_binary(Vector{0.5}, 1.0, rng), std::invalid_argument);
  CHECK(standard_normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
}

TEST_CASE("pooled OLS recovers the coefficients without informative size") {
  ScenarioConfig cfg;
  cfg.example_id = 3;
  cfg.p = 50;
  Rng rng(5);
  const GeneratedData gen = gen_dataset(cfg, rng);
  // OLS restricted to the true support.
  const std::size_t q = gen.support.size();
  Vector x;
  for (std::size_t obs = 0; obs < gen.data.num_obs(); ++obs) {
    for (std::size_t d : gen.support) x.push_back(gen.data.row(obs)[d]);
  }
  const Dataset reduced(q, {gen.data.cluster_sizes().begin(), gen.data.cluster_sizes().end()},
                        {gen.data.responses().begin(), gen.data.responses().end()}, x);
  const Vector ols = pqlwcr::testing::ols_oracle(DatasetView::full(reduced));
  for (std::size_t k = 0; k < q; ++k) {
    CHECK(std::abs(ols[k] - gen.beta_star[gen.support[k]]) < 0.1);
  }
  CHECK(gen.support == IndexSet{0, 1, 2, 3});
}

TEST_CASE("large clusters carry no signal in the informative-size design") {
  ScenarioConfig cfg;
  cfg.example_id = 1;
  cfg.n = 20000;
  cfg.p = 6;
  Rng rng(6);
  const GeneratedData gen = gen_dataset(cfg, rng);
  double sum = 0.0, count = 0.0;
  for (std::size_t i = 0; i < gen.data.num_clusters(); ++i) {
    if (gen.data.cluster_size(i) != 15) continue;
    for (std::size_t j = 0; j < 15; ++j) {
      sum += gen.data.response(gen.data.offset(i) + j);
      count += 1;
    }
  }
  CHECK(count > 10000);
  CHECK(std::abs(sum / count) < 0.05);
  const Vector marginal = marginal_beta_star(cfg);
  CHECK(marginal[0] == doctest::Approx(2.0 * 15 / 16));
  CHECK(marginal[4] == 0.0);
}

TEST_CASE("binary design without informative size matches the logistic mean") {
  ScenarioConfig cfg;
  cfg.example_id = 4;
  cfg.n = 20000;
  cfg.p = 5;
  Rng rng(7);
  const GeneratedData gen = gen_dataset(cfg, rng);
  REQUIRE(gen.data.num_obs() >= 100000);
  double y = 0.0, pred = 0.0;
  for (std::size_t obs = 0; obs < gen.data.num_obs(); ++obs) {
    y += gen.data.response(obs);
    pred += 1.0 / (1.0 + std::exp(-eta_of(gen.data, obs, gen.beta_star)));
  }
  CHECK(std::abs((y - pred) / gen.data.num_obs()) < 0.01);
}

TEST_CASE("informative-size binary design") {
  ScenarioConfig cfg;
  cfg.example_id = 2;
  cfg.n = 3000;
  cfg.p = 5;
  Rng rng(8);
  const GeneratedData gen = gen_dataset(cfg, rng);
  for (std::size_t i = 0; i < gen.data.num_clusters(); ++i) {
    const std::size_t m = gen.data.cluster_size(i);
    for (std::size_t j = 0; j < m; ++j) {
      const double v = gen.data.response(gen.data.offset(i) + j);
      CHECK((v == 0.0 || v == 1.0));
      if (m == 10) CHECK(v == 0.0);
    }
  }
  CHECK(gen.support == IndexSet{0, 1, 2});
  CHECK_THROWS_AS(marginal_beta_star(cfg), std::invalid_argument);
}

TEST_CASE("within-cluster response correlation given covariates") {
  for (int ex : {1, 3}) {
    ScenarioConfig cfg;
    cfg.example_id = ex;
    cfg.n = 40000;
    cfg.p = 5;
    cfg.rho = 0.5;
    Rng rng(100 + ex);
    const GeneratedData gen = gen_dataset(cfg, rng);
    Moments m;
    for (std::size_t i = 0; i < gen.data.num_clusters(); ++i) {
      const std::size_t size = gen.data.cluster_size(i);
      const double u = ex == 1 && size > 4 ? 0.0 : 1.0;
      const std::size_t a = gen.data.offset(i), b = a + 1;
      m.add(gen.data.response(a) - u * eta_of(gen.data, a, gen.beta_star),
            gen.data.response(b) - u * eta_of(gen.data, b, gen.beta_star));
    }
    CHECK(std::abs(m.corr() - cfg.rho) < 0.03);
  }
}

TEST_CASE("generators are deterministic and validate their config") {
  ScenarioConfig cfg;
  cfg.example_id = 2;
  cfg.n = 50;
  cfg.p = 8;
  Rng a(42), b(42);
  const GeneratedData ga = gen_dataset(cfg, a), gb = gen_dataset(cfg, b);
  CHECK(std::equal(ga.data.responses().begin(), ga.data.responses().end(),
                   gb.data.responses().begin()));
  CHECK(std::equal(ga.data.covariates().begin(), ga.data.covariates().end(),
                   gb.data.covariates().begin()));

  ScenarioConfig bad = cfg;
  bad.example_id = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.beta_star = {1.0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.rho = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK(default_beta_star(1, 6) == Vector{2, -1, 1.5, -2, 0, 0});
  CHECK(default_beta_star(4, 3) == Vector{1, -0.9, 0.7});
  CHECK(has_informative_size(2));
  CHECK(!has_informative_size(3));
}
