#include "pqlwcr/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "pqlwcr/kernels.hpp"

namespace pqlwcr {

void SolverOptions::validate() const {
  if (!(tol > 0.0)) throw std::invalid_argument("solver tol must be positive");
  if (!(zero_tol >= 0.0)) throw std::invalid_argument("zero_tol must be non-negative");
  if (max_outer_iters < 0 || max_cd_passes < 1 || max_irls_iters < 1) {
    throw std::invalid_argument("solver iteration caps must be positive");
  }
  for (std::size_t k = 0; k < lambda_grid.size(); ++k) {
    if (!(lambda_grid[k] >= 0.0) || !std::isfinite(lambda_grid[k])) {
      throw std::invalid_argument("lambda grid values must be finite and non-negative");
    }
    if (k > 0 && !(lambda_grid[k] < lambda_grid[k - 1])) {
      throw std::invalid_argument("lambda grid must be strictly descending");
    }
  }
  if (lambda_grid.empty() && (grid_size == 0 || !(lambda_min_ratio > 0.0) ||
                              !(lambda_min_ratio <= 1.0))) {
    throw std::invalid_argument("default grid needs size >= 1 and ratio in (0, 1]");
  }
}

PenaltySpec SolverOptions::spec(double lambda) const {
  return penalty == PenaltyKind::Scad ? PenaltySpec::scad(lambda, scad_a)
                                      : PenaltySpec::l1(lambda);
}

namespace {

// Column-major copy of the visible rows; private to one fit or one path.
struct Workspace {
  std::size_t m = 0;
  std::size_t p = 0;
  double inv_n = 0.0;
  Vector x;  // p columns of length m
  Vector y;

  std::span<const double> col(std::size_t d) const { return {x.data() + d * m, m}; }
};

Workspace gather(const DatasetView& view) {
  const Dataset& data = view.base();
  Workspace ws;
  ws.m = view.num_visible();
  ws.p = data.dim();
  ws.inv_n = 1.0 / static_cast<double>(view.num_clusters());
  ws.x.resize(ws.m * ws.p);
  ws.y.reserve(ws.m);
  std::size_t r = 0;
  view.for_each_visible([&](std::size_t obs) {
    const auto row = data.row(obs);
    for (std::size_t d = 0; d < ws.p; ++d) ws.x[d * ws.m + r] = row[d];
    ws.y.push_back(data.response(obs));
    ++r;
  });
  return ws;
}

void linear_predictor(const Workspace& ws, std::span<const double> beta, Vector& eta) {
  eta.assign(ws.m, 0.0);
  for (std::size_t d = 0; d < ws.p; ++d) {
    if (beta[d] != 0.0) kernels::axpy(beta[d], ws.col(d), eta);
  }
}

// Quasi-likelihood minus sum_d weights_d |beta_d|.
double weighted_objective(const Workspace& ws, ModelFamily family,
                          std::span<const double> weights, std::span<const double> beta,
                          const Vector& eta) {
  double q = 0.0;
  for (std::size_t i = 0; i < ws.m; ++i) q += quasi_loglik_obs(family, ws.y[i], eta[i]);
  q *= ws.inv_n;
  for (std::size_t d = 0; d < ws.p; ++d) q -= weights[d] * std::abs(beta[d]);
  return q;
}

struct StageStatus {
  bool converged = false;
  int passes = 0;
};

// Cyclic coordinate descent on
//   -inv_n/2 sum_i w_i (z_i - x_i'beta)^2 - sum_d weights_d |beta_d|
// with resid = z - X beta kept current. Full sweeps alternate with sweeps over
// the nonzero set until a full sweep moves no coordinate by tol or more.
StageStatus coordinate_descent(const Workspace& ws, std::span<const double> w,
                               std::span<const double> curvature,
                               std::span<const double> weights, Vector& beta, Vector& resid,
                               const SolverOptions& opts) {
  StageStatus status;
  const auto update = [&](std::size_t d) {
    const double h = curvature[d];
    if (!(h > 0.0)) {
      beta[d] = 0.0;
      return 0.0;
    }
    const auto xd = ws.col(d);
    const double grad = ws.inv_n * kernels::wdot(w, xd, resid);
    const double next = soft_threshold(h * beta[d] + grad, weights[d]) / h;
    const double delta = next - beta[d];
    if (delta != 0.0) {
      kernels::axpy(-delta, xd, resid);
      beta[d] = next;
    }
    return std::abs(delta);
  };

  IndexSet active;
  while (status.passes < opts.max_cd_passes) {
    double max_delta = 0.0;
    for (std::size_t d = 0; d < ws.p; ++d) max_delta = std::max(max_delta, update(d));
    ++status.passes;
    if (max_delta < opts.tol) {
      status.converged = true;
      break;
    }
    active.clear();
    for (std::size_t d = 0; d < ws.p; ++d) {
      if (beta[d] != 0.0) active.push_back(d);
    }
    while (status.passes < opts.max_cd_passes) {
      double inner = 0.0;
      for (std::size_t d : active) inner = std::max(inner, update(d));
      ++status.passes;
      if (inner < opts.tol) break;
    }
  }
  return status;
}

// Maximizes quasi-likelihood minus sum_d weights_d |beta_d| starting from beta.
StageStatus solve_weighted_l1(const Workspace& ws, ModelFamily family,
                              std::span<const double> weights, Vector& beta,
                              const SolverOptions& opts) {
  StageStatus total;
  Vector eta;
  Vector w(ws.m, 1.0);
  Vector resid(ws.m);
  Vector curvature(ws.p);

  if (family.kind == FamilyKind::GaussianIdentity) {
    linear_predictor(ws, beta, eta);
    for (std::size_t i = 0; i < ws.m; ++i) resid[i] = ws.y[i] - eta[i];
    for (std::size_t d = 0; d < ws.p; ++d) {
      curvature[d] = ws.inv_n * kernels::wsumsq(w, ws.col(d));
    }
    total = coordinate_descent(ws, w, curvature, weights, beta, resid, opts);
    linear_predictor(ws, beta, eta);
    if (!std::isfinite(weighted_objective(ws, family, weights, beta, eta))) {
      throw DivergenceError("non-finite objective in Gaussian fit");
    }
    return total;
  }

  linear_predictor(ws, beta, eta);
  double current = weighted_objective(ws, family, weights, beta, eta);
  if (!std::isfinite(current)) throw DivergenceError("non-finite objective at IRLS start");
  Vector previous;
  total.converged = false;
  for (int it = 0; it < opts.max_irls_iters; ++it) {
    for (std::size_t i = 0; i < ws.m; ++i) {
      const double mu = mean_link(family, eta[i]);
      w[i] = std::max(mu * (1.0 - mu), opts.irls_weight_floor);
      resid[i] = (ws.y[i] - mu) / w[i];
    }
    for (std::size_t d = 0; d < ws.p; ++d) {
      curvature[d] = ws.inv_n * kernels::wsumsq(w, ws.col(d));
    }
    previous = beta;
    const StageStatus inner = coordinate_descent(ws, w, curvature, weights, beta, resid, opts);
    total.passes += inner.passes;

    linear_predictor(ws, beta, eta);
    double next = weighted_objective(ws, family, weights, beta, eta);
    if (!std::isfinite(next)) throw DivergenceError("non-finite objective during IRLS");
    // Step halving keeps the surrogate objective non-decreasing.
    const double slack = 1e-13 * (1.0 + std::abs(current));
    for (int halve = 0; halve < 30 && next < current - slack; ++halve) {
      for (std::size_t d = 0; d < ws.p; ++d) beta[d] = 0.5 * (beta[d] + previous[d]);
      linear_predictor(ws, beta, eta);
      next = weighted_objective(ws, family, weights, beta, eta);
    }
    if (next < current - slack) {
      beta = previous;
      linear_predictor(ws, beta, eta);
      next = current;
    }
    double change = 0.0;
    for (std::size_t d = 0; d < ws.p; ++d) {
      change = std::max(change, std::abs(beta[d] - previous[d]));
    }
    current = next;
    if (change < opts.tol && inner.converged) {
      total.converged = true;
      break;
    }
  }
  return total;
}

Vector penalty_weights(const PenaltySpec& spec, std::span<const double> beta,
                       std::size_t unpenalized_leading, bool lla) {
  Vector weights(beta.size());
  for (std::size_t d = 0; d < beta.size(); ++d) {
    if (d < unpenalized_leading) {
      weights[d] = 0.0;
    } else {
      weights[d] = lla ? penalty_derivative(spec, std::abs(beta[d])) : spec.lambda;
    }
  }
  return weights;
}

FitResult fit_on_workspace(const Workspace& ws, const DatasetView& view, ModelFamily family,
                           const PenaltySpec& spec, const SolverOptions& opts,
                           std::optional<std::span<const double>> warm) {
  FitResult result;
  result.lambda = spec.lambda;
  Vector beta(ws.p, 0.0);
  if (warm) {
    if (warm->size() != ws.p) throw std::invalid_argument("warm start has wrong length");
    beta.assign(warm->begin(), warm->end());
    for (double b : beta) {
      if (!std::isfinite(b)) throw std::invalid_argument("warm start must be finite");
    }
  }
  const std::size_t lead = opts.unpenalized_leading;
  const auto objective = [&](const Vector& b) {
    return penalized_objective(view, family, spec, b, lead);
  };

  // L1 start at the same lambda.
  Vector weights = penalty_weights(spec, beta, lead, false);
  StageStatus stage = solve_weighted_l1(ws, family, weights, beta, opts);
  result.iterations += stage.passes;
  bool inner_ok = stage.converged;
  result.objective_trace.push_back(objective(beta));

  bool lla_settled = true;
  if (spec.kind == PenaltyKind::Scad && spec.lambda > 0.0) {
    lla_settled = false;
    for (int round = 0; round < opts.max_outer_iters; ++round) {
      Vector before = beta;
      weights = penalty_weights(spec, beta, lead, true);
      stage = solve_weighted_l1(ws, family, weights, beta, opts);
      result.iterations += stage.passes;
      inner_ok = stage.converged;
      result.objective_trace.push_back(objective(beta));
      double change = 0.0;
      for (std::size_t d = 0; d < ws.p; ++d) {
        change = std::max(change, std::abs(beta[d] - before[d]));
      }
      if (change < opts.tol) {
        lla_settled = true;
        break;
      }
    }
  }

  result.objective = result.objective_trace.back();
  if (!std::isfinite(result.objective)) throw DivergenceError("non-finite penalized objective");
  result.converged = inner_ok && lla_settled;
  result.support = support_of(beta, opts.zero_tol);
  result.beta = std::move(beta);
  result.bic = bic_score(view, family, result.beta, opts.zero_tol);
  return result;
}

}  // namespace

IndexSet support_of(std::span<const double> beta, double zero_tol) {
  IndexSet support;
  for (std::size_t d = 0; d < beta.size(); ++d) {
    if (std::abs(beta[d]) > zero_tol) support.push_back(d);
  }
  return support;
}

double penalized_objective(const DatasetView& view, ModelFamily family,
                           const PenaltySpec& spec, std::span<const double> beta,
                           std::size_t unpenalized_leading) {
  double value = quasi_loglik(view, beta, family);
  for (std::size_t d = unpenalized_leading; d < beta.size(); ++d) {
    value -= penalty_value(spec, std::abs(beta[d]));
  }
  return value;
}

FitResult fit_penalized(const DatasetView& view, ModelFamily family, const PenaltySpec& spec,
                        const SolverOptions& opts,
                        std::optional<std::span<const double>> warm) {
  opts.validate();
  if (view.num_visible() == 0) throw std::invalid_argument("cannot fit an empty view");
  const Workspace ws = gather(view);
  return fit_on_workspace(ws, view, family, spec, opts, warm);
}

double kkt_violation(const DatasetView& view, ModelFamily family, const PenaltySpec& spec,
                     std::span<const double> beta, double zero_tol,
                     std::size_t unpenalized_leading) {
  const Vector score = quasi_score(view, beta, family);
  const double slope_at_zero = penalty_derivative(spec, 0.0);
  double worst = 0.0;
  for (std::size_t d = 0; d < beta.size(); ++d) {
    double v;
    if (d < unpenalized_leading) {
      v = std::abs(score[d]);
    } else if (std::abs(beta[d]) > zero_tol) {
      const double sign = beta[d] > 0.0 ? 1.0 : -1.0;
      v = std::abs(score[d] - penalty_derivative(spec, std::abs(beta[d])) * sign);
    } else {
      v = std::max(0.0, std::abs(score[d]) - slope_at_zero);
    }
    worst = std::max(worst, v);
  }
  return worst;
}

double bic_score(const DatasetView& view, ModelFamily family, std::span<const double> beta,
                 double zero_tol) {
  const double n = static_cast<double>(view.num_clusters());
  const double m = static_cast<double>(view.num_visible());
  const double fit = -2.0 * n * quasi_loglik(view, beta, family);
  return fit + static_cast<double>(support_of(beta, zero_tol).size()) * std::log(m);
}

Vector default_lambda_grid(const DatasetView& view, ModelFamily family, std::size_t size,
                           double min_ratio, std::size_t unpenalized_leading) {
  if (size == 0) throw std::invalid_argument("lambda grid size must be positive");
  const Vector zero(view.base().dim(), 0.0);
  const Vector score = quasi_score(view, zero, family);
  double lambda_max = 0.0;
  for (std::size_t d = unpenalized_leading; d < score.size(); ++d) {
    lambda_max = std::max(lambda_max, std::abs(score[d]));
  }
  // Flat score at the origin: any positive lambda keeps every coordinate at zero.
  if (!(lambda_max > 0.0)) lambda_max = 1.0;
  Vector grid(size);
  if (size == 1) {
    grid[0] = lambda_max;
    return grid;
  }
  const double log_step = std::log(min_ratio) / static_cast<double>(size - 1);
  for (std::size_t k = 0; k < size; ++k) {
    grid[k] = lambda_max * std::exp(log_step * static_cast<double>(k));
  }
  return grid;
}

FitResult tune_lambda(const DatasetView& view, ModelFamily family, const SolverOptions& opts) {
  opts.validate();
  if (view.num_visible() == 0) throw std::invalid_argument("cannot fit an empty view");
  const Vector grid = opts.lambda_grid.empty()
                          ? default_lambda_grid(view, family, opts.grid_size,
                                                opts.lambda_min_ratio, opts.unpenalized_leading)
                          : opts.lambda_grid;
  const Workspace ws = gather(view);

  std::optional<FitResult> best;
  std::optional<Vector> warm;
  std::size_t skipped = 0;
  for (double lambda : grid) {
    FitResult fit;
    try {
      fit = fit_on_workspace(ws, view, family, opts.spec(lambda), opts,
                             warm ? std::optional<std::span<const double>>(*warm)
                                  : std::nullopt);
    } catch (const DivergenceError&) {
      ++skipped;
      warm.reset();
      continue;
    }
    warm = fit.beta;
    const std::size_t df = fit.support.size();
    if (!best || fit.bic < best->bic) best = std::move(fit);
    // A saturated model ends the path; smaller lambdas cannot lower BIC meaningfully.
    if (df + 1 >= ws.m) break;
  }
  if (!best) {
    throw DivergenceError("every lambda on the grid diverged (" + std::to_string(skipped) +
                          " points)");
  }
  best->skipped_lambdas = skipped;
  return *best;
}

}  // namespace pqlwcr
