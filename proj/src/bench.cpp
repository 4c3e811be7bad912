#include "pqlwcr/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pqlwcr/parallel.hpp"
#include "pqlwcr/wcr.hpp"

namespace pqlwcr {

std::string_view method_name(Method method) {
  return method == Method::PqlWcr ? "pql_wcr" : "naive_lasso";
}

Method parse_method(std::string_view name) {
  if (name == "pql_wcr") return Method::PqlWcr;
  if (name == "naive_lasso") return Method::NaiveLasso;
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

ReplicateScore score_replicate(std::span<const double> beta_hat, const IndexSet& support_hat,
                               std::span<const double> beta_star,
                               const IndexSet& support_star) {
  if (beta_hat.size() != beta_star.size()) {
    throw std::invalid_argument("estimate and truth differ in dimension");
  }
  ReplicateScore score;
  for (std::size_t d : support_hat) {
    const bool truth = std::find(support_star.begin(), support_star.end(), d) != support_star.end();
    if (truth) {
      ++score.tp;
    } else {
      ++score.fp;
    }
  }
  score.covered = score.tp == support_star.size();
  for (std::size_t d : support_star) {
    if (std::find(support_hat.begin(), support_hat.end(), d) == support_hat.end()) {
      score.covered = false;
    }
  }
  for (std::size_t d = 0; d < beta_hat.size(); ++d) {
    const double diff = beta_hat[d] - beta_star[d];
    score.sq_err += diff * diff;
  }
  return score;
}

namespace {

void mean_sd(std::span<const double> values, double& mean, double& sd) {
  mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  sd = 0.0;
  if (values.size() < 2) return;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
}

}  // namespace

MetricsReport summarize(std::span<const ReplicateRecord> records) {
  if (records.empty()) throw std::invalid_argument("no replicate records to summarize");
  Vector tp, fp, se, cov;
  for (const ReplicateRecord& r : records) {
    tp.push_back(static_cast<double>(r.score.tp));
    fp.push_back(static_cast<double>(r.score.fp));
    se.push_back(r.score.sq_err);
    cov.push_back(r.score.covered ? 1.0 : 0.0);
  }
  MetricsReport report;
  mean_sd(tp, report.tp_mean, report.tp_sd);
  mean_sd(fp, report.fp_mean, report.fp_sd);
  mean_sd(se, report.mse_mean, report.mse_sd);
  mean_sd(cov, report.cr, report.cr_sd);
  report.replications = records.size();
  return report;
}

MethodEstimate run_method(const Dataset& data, ModelFamily family, Method method,
                          const BenchOptions& opts, std::uint64_t seed) {
  MethodEstimate out;
  if (method == Method::NaiveLasso) {
    SolverOptions solver = opts.solver;
    solver.penalty = PenaltyKind::L1;
    const FitResult fit = tune_lambda(DatasetView::full(data), family, solver);
    out.beta_hat = fit.beta;
    out.support = selected_set(fit.beta);
    out.k_effective = 1;
    return out;
  }
  WcrOptions wcr;
  wcr.solver = opts.solver;
  wcr.solver.penalty = PenaltyKind::Scad;
  wcr.threads = opts.threads;
  const WcrEnsemble ensemble = run_wcr(data, family, opts.K, wcr, seed);
  const Vector grid = default_aggregation_grid(data.dim(), data.num_clusters(),
                                               opts.agg_grid_size);
  const AggregateResult agg =
      tune_aggregation(ensemble, data, family, grid, opts.solver.unpenalized_leading);
  out.beta_hat = agg.beta_hat;
  out.support = agg.support;
  out.k_effective = ensemble.k_effective();
  return out;
}

ReplicationRun run_replications(const ScenarioConfig& config, Method method, std::size_t R,
                                std::uint64_t master_seed, const BenchOptions& opts) {
  if (R == 0) throw std::invalid_argument("replications must be at least 1");
  config.validate();
  const auto wall_start = std::chrono::steady_clock::now();
  const ModelFamily family = family_for_example(config.example_id);

  // Parallelize across replicates when there are enough of them, otherwise
  // inside each ensemble. Results do not depend on the split.
  const bool outer = opts.threads > 1 && R >= opts.threads;
  BenchOptions inner = opts;
  inner.threads = outer ? 1 : opts.threads;

  ReplicationRun run;
  run.records.resize(R);
  parallel_for(R, outer ? opts.threads : 1, [&](std::size_t r) {
    const auto start = std::chrono::steady_clock::now();
    ReplicateRecord& rec = run.records[r];
    rec.replicate = r;
    rec.seed = derive_seed(master_seed, r);
    try {
      Rng rng(derive_seed(rec.seed, 0));
      const GeneratedData gen = gen_dataset(config, rng);
      const MethodEstimate est =
          run_method(gen.data, family, method, inner, derive_seed(rec.seed, 1));
      rec.beta_hat = est.beta_hat;
      rec.support = est.support;
      rec.k_effective = est.k_effective;
      rec.score = score_replicate(rec.beta_hat, rec.support, gen.beta_star, gen.support);
    } catch (const std::exception& e) {
      throw std::runtime_error("replicate " + std::to_string(r) + ": " + e.what());
    }
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });
  run.report = summarize(run.records);
  run.report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return run;
}

}  // namespace pqlwcr
