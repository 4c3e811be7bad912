#include <cmath>
#include <algorithm>
#include <limits>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "oracles.hpp"
#include "pqlwcr/datagen.hpp"
#include "pqlwcr/solver.hpp"
#include "pqlwcr/wcr.hpp"
#include "test_support.hpp"

using namespace pqlwcr;
using pqlwcr::testing::max_abs_diff;
using pqlwcr::testing::random_dataset;

namespace {

double score_inf_norm(const DatasetView& view, ModelFamily family) {
  const Vector s = quasi_score(view, Vector(view.base().dim(), 0.0), family);
  double m = 0.0;
  for (double v : s) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

TEST_CASE("lambda = 0 reproduces OLS") {
  const Dataset data = random_dataset(200, 4, 1, ModelFamily::gaussian(), 11, {1, -2, 0.5, 0});
  const DatasetView view = DatasetView::full(data);
  for (PenaltyKind kind : {PenaltyKind::L1, PenaltyKind::Scad}) {
    SolverOptions opts;
    opts.penalty = kind;
    opts.tol = 1e-10;
    const FitResult fit = fit_penalized(view, ModelFamily::gaussian(), opts.spec(0.0), opts);
    CHECK(max_abs_diff(fit.beta, pqlwcr::testing::ols_oracle(view)) < 1e-6);
  }
  // Resampled view of a clustered dataset.
  const Dataset clustered = random_dataset(150, 5, 4, ModelFamily::gaussian(), 12, {1, 0, 0, 2, 0});
  Rng rng(5);
  const ResampleIndex z = draw_resample(clustered.cluster_sizes(), rng);
  const DatasetView rv = DatasetView::resampled(clustered, z);
  SolverOptions opts;
  opts.tol = 1e-10;
  const FitResult fit = fit_penalized(rv, ModelFamily::gaussian(), opts.spec(0.0), opts);
  CHECK(max_abs_diff(fit.beta, pqlwcr::testing::ols_oracle(rv)) < 1e-6);
}

TEST_CASE("lambda above the score bound gives the zero vector") {
  for (ModelFamily f : {ModelFamily::gaussian(), ModelFamily::binomial()}) {
    const Dataset data = random_dataset(100, 8, 3, f, 31, {1, -1, 0, 0, 0, 0, 0, 0});
    const DatasetView view = DatasetView::full(data);
    const double bound = score_inf_norm(view, f);
    SolverOptions opts;
    const FitResult fit = fit_penalized(view, f, opts.spec(bound * 1.0001), opts);
    CHECK(fit.support.empty());
    for (double b : fit.beta) CHECK(b == 0.0);
    CHECK(kkt_violation(view, f, opts.spec(bound), Vector(8, 0.0)) == 0.0);
  }
}

TEST_CASE("orthonormal design: L1 fit is soft-thresholded OLS") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  const std::size_t n = 64, p = 6;
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = normal(rng);
  const Dataset data = oracle::walsh_design(n, p, y);
  const DatasetView view = DatasetView::full(data);
  // X'X / n = I is a property of the construction; check it rather than trust it.
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b < p; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += data.row(i)[a] * data.row(i)[b];
      CHECK(s / n == (a == b ? 1.0 : 0.0));
    }
  }
  const Vector ols = pqlwcr::testing::ols_oracle(view);
  SolverOptions opts;
  opts.penalty = PenaltyKind::L1;
  for (double lambda : {0.01, 0.05, 0.1, 0.2, 0.5}) {
    const FitResult fit = fit_penalized(view, ModelFamily::gaussian(), opts.spec(lambda), opts);
    for (std::size_t d = 0; d < p; ++d) {
      CHECK(std::abs(fit.beta[d] - soft_threshold(ols[d], lambda)) < 1e-6);
    }
  }
}

TEST_CASE("converged fits satisfy the KKT conditions") {
  int checked = 0;
  for (int inst = 0; inst < 24; ++inst) {
    const ModelFamily f = inst % 2 ? ModelFamily::binomial() : ModelFamily::gaussian();
    const Dataset data = random_dataset(120, 10, 3, f, 500 + inst, {1.2, -0.8, 0, 0, 0.6});
    Rng rng(inst);
    const ResampleIndex z = draw_resample(data.cluster_sizes(), rng);
    const DatasetView view = inst % 3 ? DatasetView::resampled(data, z) : DatasetView::full(data);
    const double bound = score_inf_norm(view, f);
    for (PenaltyKind kind : {PenaltyKind::Scad, PenaltyKind::L1}) {
      SolverOptions opts;
      opts.penalty = kind;
      for (double frac : {0.05, 0.2, 0.5}) {
        const PenaltySpec spec = opts.spec(frac * bound);
        const FitResult fit = fit_penalized(view, f, spec, opts);
        if (!fit.converged) continue;
        ++checked;
        CHECK(kkt_violation(view, f, spec, fit.beta, opts.zero_tol) < 1e-4);
      }
    }
  }
  CHECK(checked >= 100);
}

TEST_CASE("perturbing an active coordinate breaks stationarity") {
  const Dataset data = random_dataset(100, 5, 1, ModelFamily::gaussian(), 7, {2, -1, 0, 0, 0});
  const DatasetView view = DatasetView::full(data);
  SolverOptions opts;
  const PenaltySpec spec = opts.spec(0.1);
  FitResult fit = fit_penalized(view, ModelFamily::gaussian(), spec, opts);
  REQUIRE(fit.converged);
  REQUIRE(!fit.support.empty());
  CHECK(kkt_violation(view, ModelFamily::gaussian(), spec, fit.beta) < 1e-4);
  fit.beta[fit.support.front()] += 0.1;
  CHECK(kkt_violation(view, ModelFamily::gaussian(), spec, fit.beta) > 0.01);
}

TEST_CASE("bic_score examples") {
  // Zero-residual Gaussian fit with two nonzeros over three observations.
  const Dataset exact(2, {1, 1, 1}, {1, 2, 3}, {1, 0, 0, 1, 1, 1});
  const Vector beta{1, 2};
  CHECK(bic_score(DatasetView::full(exact), ModelFamily::gaussian(), beta, 1e-8) ==
        doctest::Approx(2 * std::log(3.0)).epsilon(1e-14));

  std::vector<std::size_t> sizes(50, 2);
  Vector y(100), x(100);
  for (std::size_t i = 0; i < 100; ++i) {
    y[i] = i % 2;
    x[i] = 1.0;
  }
  const Dataset balanced(1, sizes, y, x);
  CHECK(bic_score(DatasetView::full(balanced), ModelFamily::binomial(), Vector{0.0}, 1e-8) ==
        doctest::Approx(200 * std::log(2.0)).epsilon(1e-13));
  CHECK(200 * std::log(2.0) == doctest::Approx(138.629).epsilon(1e-5));

  // A coordinate whose column is zero changes nothing but the df term.
  const Dataset padded(2, {1, 1, 1}, {1, 2, 4}, {1, 0, 2, 0, 3, 0});
  const DatasetView pv = DatasetView::full(padded);
  const double b1 = bic_score(pv, ModelFamily::gaussian(), Vector{1.1, 0.0}, 1e-8);
  const double b2 = bic_score(pv, ModelFamily::gaussian(), Vector{1.1, 0.7}, 1e-8);
  CHECK(b2 - b1 == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("reported objective matches its parts and LLA is monotone") {
  for (int inst = 0; inst < 20; ++inst) {
    const ModelFamily f = inst % 2 ? ModelFamily::binomial() : ModelFamily::gaussian();
    const Dataset data = random_dataset(80, 12, 3, f, 900 + inst, {1, 0, -1, 0, 0, 0.5});
    const DatasetView view = DatasetView::full(data);
    SolverOptions opts;
    opts.max_outer_iters = 6;
    const PenaltySpec spec = opts.spec(0.15 * score_inf_norm(view, f));
    const FitResult fit = fit_penalized(view, f, spec, opts);
    double by_parts = quasi_loglik(view, fit.beta, f);
    for (double b : fit.beta) by_parts -= penalty_value(spec, std::abs(b));
    CHECK(std::abs(fit.objective - by_parts) < 1e-10);
    for (std::size_t k = 1; k < fit.objective_trace.size(); ++k) {
      CHECK(fit.objective_trace[k] >= fit.objective_trace[k - 1] - 1e-10);
    }
    CHECK(fit.support == support_of(fit.beta, opts.zero_tol));
  }
}

TEST_CASE("single-point grid equals fit_penalized and paths are deterministic") {
  const Dataset data = random_dataset(90, 7, 3, ModelFamily::binomial(), 41, {1, -1, 0, 0.5});
  const DatasetView view = DatasetView::full(data);
  SolverOptions opts;
  opts.lambda_grid = {0.05};
  const FitResult tuned = tune_lambda(view, ModelFamily::binomial(), opts);
  const FitResult direct = fit_penalized(view, ModelFamily::binomial(), opts.spec(0.05), opts);
  CHECK(tuned.beta == direct.beta);
  CHECK(tuned.bic == direct.bic);

  SolverOptions path;
  const FitResult a = tune_lambda(view, ModelFamily::binomial(), path);
  const FitResult b = tune_lambda(view, ModelFamily::binomial(), path);
  CHECK(a.beta == b.beta);
  CHECK(a.lambda == b.lambda);
}

TEST_CASE("default lambda grid") {
  const Dataset data = random_dataset(60, 5, 2, ModelFamily::gaussian(), 3, {1, 0, 0, 0, 0});
  const DatasetView view = DatasetView::full(data);
  const Vector grid = default_lambda_grid(view, ModelFamily::gaussian(), 50, 0.01);
  REQUIRE(grid.size() == 50);
  CHECK(grid.front() == doctest::Approx(score_inf_norm(view, ModelFamily::gaussian())));
  CHECK(grid.back() == doctest::Approx(0.01 * grid.front()));
  for (std::size_t k = 1; k < grid.size(); ++k) CHECK(grid[k] < grid[k - 1]);
}

TEST_CASE("option validation and divergence") {
  SolverOptions bad;
  bad.lambda_grid = {0.1, 0.2};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.lambda_grid.clear();
  bad.tol = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  const Dataset data = random_dataset(20, 3, 2, ModelFamily::gaussian(), 2);
  SolverOptions opts;
  const Vector warm{std::numeric_limits<double>::quiet_NaN(), 0.0, 0.0};
  CHECK_THROWS_AS(fit_penalized(DatasetView::full(data), ModelFamily::gaussian(),
                                opts.spec(0.1), opts, std::span<const double>(warm)),
                  std::invalid_argument);
  CHECK_THROWS_AS(fit_penalized(DatasetView::full(data), ModelFamily::gaussian(),
                                opts.spec(0.1), opts, std::span<const double>(Vector{1.0})),
                  std::invalid_argument);

  // Squared residuals overflow.
  const Dataset huge(1, {1, 1}, {1e200, -1e200}, {1.0, 1.0});
  CHECK_THROWS_AS(fit_penalized(DatasetView::full(huge), ModelFamily::gaussian(),
                                opts.spec(0.1), opts),
                  DivergenceError);
  SolverOptions grid;
  grid.lambda_grid = {1.0, 0.5};
  CHECK_THROWS_AS(tune_lambda(DatasetView::full(huge), ModelFamily::gaussian(), grid),
                  DivergenceError);
}

TEST_CASE("pure-noise response mostly selects nothing") {
  int empty_unit = 0, empty_half = 0;
  const int runs = 100;
  for (int r = 0; r < runs; ++r) {
    for (double sd : {1.0, 0.5}) {
      Dataset base = random_dataset(200, 10, 1, ModelFamily::gaussian(), 7000 + r);
      Vector y(base.responses().begin(), base.responses().end());
      for (double& v : y) v *= sd;
      Vector x(base.covariates().begin(), base.covariates().end());
      const Dataset data(10, {base.cluster_sizes().begin(), base.cluster_sizes().end()}, y, x);
      const FitResult fit = tune_lambda(DatasetView::full(data), ModelFamily::gaussian(), {});
      if (fit.support.empty()) ++(sd == 1.0 ? empty_unit : empty_half);
    }
  }
  MESSAGE("empty support, unit noise: " << empty_unit << "/" << runs
                                        << ", half-sd noise: " << empty_half << "/" << runs);
  CHECK(empty_unit >= 95);
  CHECK(empty_half >= 95);
}

TEST_CASE("single resample of the informative-size design keeps the true support") {
  ScenarioConfig cfg;
  cfg.example_id = 1;
  const int runs = 40;
  int covered = 0;
  for (int r = 0; r < runs; ++r) {
    Rng rng(derive_seed(123, r));
    const GeneratedData gen = gen_dataset(cfg, rng);
    const ResampleIndex z = draw_resample(gen.data.cluster_sizes(), rng);
    const DatasetView view = DatasetView::resampled(gen.data, z);
    const FitResult fit = tune_lambda(view, ModelFamily::gaussian(), {});
    bool all = true;
    for (std::size_t d : gen.support) {
      all = all && std::find(fit.support.begin(), fit.support.end(), d) != fit.support.end();
    }
    covered += all;
  }
  CHECK(covered >= 0.95 * runs);
}
