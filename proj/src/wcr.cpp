#include "pqlwcr/wcr.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "pqlwcr/parallel.hpp"
#include "pqlwcr/penalty.hpp"

namespace pqlwcr {

ResampleIndex draw_resample(std::span<const std::size_t> cluster_sizes, Rng& rng) {
  ResampleIndex index;
  index.z.resize(cluster_sizes.size());
  for (std::size_t i = 0; i < cluster_sizes.size(); ++i) {
    const std::size_t m = cluster_sizes[i];
    if (m == 0) throw std::invalid_argument("cannot resample an empty cluster");
    if (m == 1) {
      index.z[i] = 0;
      continue;
    }
    std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(m - 1));
    index.z[i] = pick(rng);
  }
  return index;
}

Vector WcrEnsemble::recompute_mean() const {
  if (fits.empty()) return {};
  Vector mean(fits.front().beta.size(), 0.0);
  for (const FitResult& fit : fits) {
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += fit.beta[d];
  }
  const double inv = 1.0 / static_cast<double>(fits.size());
  for (double& v : mean) v *= inv;
  return mean;
}

std::uint64_t resample_seed(std::uint64_t master_seed, std::size_t k) {
  return derive_seed(master_seed, k);
}

WcrEnsemble run_wcr(const Dataset& data, ModelFamily family, std::size_t K,
                    const WcrOptions& opts, std::uint64_t master_seed) {
  if (K == 0) throw std::invalid_argument("K must be at least 1");
  opts.solver.validate();

  std::vector<ResampleIndex> resamples(K);
  std::vector<std::uint64_t> seeds(K);
  std::vector<std::optional<FitResult>> slots(K);

  parallel_for(K, opts.threads, [&](std::size_t k) {
    seeds[k] = resample_seed(master_seed, k);
    Rng rng(seeds[k]);
    resamples[k] = draw_resample(data.cluster_sizes(), rng);
    const DatasetView view = DatasetView::resampled(data, resamples[k]);
    try {
      slots[k] = tune_lambda(view, family, opts.solver);
    } catch (const DivergenceError&) {
      slots[k].reset();
    }
  });

  WcrEnsemble ensemble;
  ensemble.K = K;
  for (std::size_t k = 0; k < K; ++k) {
    if (!slots[k]) {
      ensemble.dropped.push_back(k);
      continue;
    }
    ensemble.fits.push_back(std::move(*slots[k]));
    ensemble.ids.push_back(k);
    ensemble.seeds.push_back(seeds[k]);
    ensemble.resamples.push_back(std::move(resamples[k]));
  }
  const double drop_fraction =
      static_cast<double>(ensemble.dropped.size()) / static_cast<double>(K);
  if (ensemble.fits.empty() || drop_fraction > opts.max_drop_fraction) {
    throw DivergenceError(std::to_string(ensemble.dropped.size()) + " of " +
                          std::to_string(K) + " resample fits diverged");
  }
  ensemble.componentwise_mean = ensemble.recompute_mean();
  return ensemble;
}

namespace {

Vector selection_frequency(const WcrEnsemble& ensemble) {
  const std::size_t p = ensemble.componentwise_mean.size();
  Vector freq(p, 0.0);
  for (const FitResult& fit : ensemble.fits) {
    for (std::size_t d = 0; d < p; ++d) {
      if (fit.beta[d] != 0.0) freq[d] += 1.0;
    }
  }
  const double inv = 1.0 / static_cast<double>(std::max<std::size_t>(1, ensemble.fits.size()));
  for (double& f : freq) f *= inv;
  return freq;
}

}  // namespace

AggregateResult aggregate(const WcrEnsemble& ensemble, std::span<const double> lambda_agg) {
  const Vector& mean = ensemble.componentwise_mean;
  if (lambda_agg.size() != mean.size()) {
    throw std::invalid_argument("aggregation lambda has wrong length");
  }
  AggregateResult result;
  result.beta_hat.resize(mean.size());
  for (std::size_t d = 0; d < mean.size(); ++d) {
    if (!(lambda_agg[d] >= 0.0)) {
      throw std::domain_error("aggregation lambda must be non-negative");
    }
    result.beta_hat[d] = soft_threshold(mean[d], 0.5 * lambda_agg[d]);
  }
  result.support = selected_set(result.beta_hat);
  result.lambda_agg.assign(lambda_agg.begin(), lambda_agg.end());
  result.selection_frequency = selection_frequency(ensemble);
  return result;
}

AggregateResult aggregate(const WcrEnsemble& ensemble, double lambda_agg) {
  const Vector lambdas(ensemble.componentwise_mean.size(), lambda_agg);
  return aggregate(ensemble, lambdas);
}

double aggregation_objective(const WcrEnsemble& ensemble, std::span<const double> lambda_agg,
                             std::span<const double> b) {
  double total = 0.0;
  for (const FitResult& fit : ensemble.fits) {
    for (std::size_t d = 0; d < b.size(); ++d) {
      const double diff = fit.beta[d] - b[d];
      total += diff * diff;
    }
  }
  total /= static_cast<double>(ensemble.fits.size());
  for (std::size_t d = 0; d < b.size(); ++d) total += lambda_agg[d] * std::abs(b[d]);
  return total;
}

Vector default_aggregation_grid(std::size_t p, std::size_t n, std::size_t size) {
  if (p == 0 || n == 0 || size == 0) throw std::invalid_argument("empty aggregation grid");
  // log p is zero for p = 1; fall back to the 1/sqrt(n) rate.
  const double scale =
      std::sqrt(std::max(std::log(static_cast<double>(p)), 1.0) / static_cast<double>(n));
  Vector grid(size);
  if (size == 1) {
    grid[0] = scale;
    return grid;
  }
  const double lo = std::log(0.01);
  const double hi = std::log(2.0);
  for (std::size_t k = 0; k < size; ++k) {
    // Descending, so ties resolve to the larger lambda by first occurrence.
    const double t = static_cast<double>(k) / static_cast<double>(size - 1);
    grid[k] = scale * std::exp(hi + (lo - hi) * t);
  }
  return grid;
}

AggregateResult tune_aggregation(const WcrEnsemble& ensemble, const Dataset& data,
                                 ModelFamily family, std::span<const double> grid,
                                 std::size_t unpenalized_leading) {
  if (grid.empty()) throw std::invalid_argument("aggregation grid is empty");
  const std::size_t p = ensemble.componentwise_mean.size();
  const double log_n = std::log(static_cast<double>(data.num_clusters()));
  const double n = static_cast<double>(data.num_clusters());

  // Visit candidates from the largest lambda down regardless of grid order.
  std::vector<std::size_t> order(grid.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return grid[a] > grid[b]; });

  std::optional<AggregateResult> best;
  double last_fit = 0.0;
  Vector last_beta;
  for (std::size_t idx : order) {
    Vector lambdas(p, grid[idx]);
    for (std::size_t d = 0; d < std::min(unpenalized_leading, p); ++d) lambdas[d] = 0.0;
    AggregateResult candidate = aggregate(ensemble, lambdas);
    double fit_term;
    if (!last_beta.empty() && candidate.beta_hat == last_beta) {
      fit_term = last_fit;
    } else {
      fit_term = 0.0;
      for (const ResampleIndex& z : ensemble.resamples) {
        const DatasetView view = DatasetView::resampled(data, z);
        fit_term += -2.0 * n * quasi_loglik(view, candidate.beta_hat, family);
      }
      fit_term /= static_cast<double>(ensemble.resamples.size());
    }
    last_beta = candidate.beta_hat;
    last_fit = fit_term;
    candidate.score = fit_term + static_cast<double>(candidate.support.size()) * log_n;
    if (!best || candidate.score < best->score) best = std::move(candidate);
  }
  return *best;
}

IndexSet selected_set(std::span<const double> beta) {
  IndexSet out;
  for (std::size_t d = 0; d < beta.size(); ++d) {
    if (beta[d] != 0.0) out.push_back(d);
  }
  return out;
}

}  // namespace pqlwcr
