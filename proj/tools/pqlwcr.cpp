// pqlwcr: penalized quasi-likelihood with within-cluster resampling.

#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "pqlwcr/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Variable selection for clustered data with informative cluster size"};
  app.require_subcommand(1);
  app.set_version_flag("--version", pqlwcr::kSoftwareVersion);

  std::filesystem::path sim_config, sim_out;
  std::optional<std::uint64_t> sim_seed;
  unsigned sim_threads = 1;
  auto* simulate = app.add_subcommand("simulate", "Run replicated simulation studies");
  simulate->add_option("config", sim_config, "Key=value config file")->required();
  simulate->add_option("out_dir", sim_out, "Output directory")->required();
  simulate->add_option("--seed", sim_seed, "Override master_seed from the config");
  simulate->add_option("--threads", sim_threads, "Worker threads")->check(CLI::PositiveNumber);

  pqlwcr::FitArgs fit_args;
  double agg_lambda = -1.0;
  auto* fit = app.add_subcommand("fit", "Fit PQL_WCR to a clustered CSV file");
  fit->add_option("data", fit_args.data_path, "CSV with header cluster,y,x1,...,xp")->required();
  fit->add_option("--family", fit_args.family, "gaussian or binomial")
      ->check(CLI::IsMember({"gaussian", "binomial"}));
  fit->add_option("--out", fit_args.out_dir, "Output directory");
  fit->add_option("--k", fit_args.k, "Number of within-cluster resamples")
      ->check(CLI::PositiveNumber);
  fit->add_option("--seed", fit_args.seed, "Master seed");
  fit->add_option("--threads", fit_args.threads, "Worker threads")->check(CLI::PositiveNumber);
  fit->add_option("--lambda-grid-size", fit_args.lambda_grid_size, "Inner lambda path length");
  fit->add_option("--lambda-min-ratio", fit_args.lambda_min_ratio, "Smallest/largest inner lambda");
  fit->add_option("--lambda", fit_args.lambdas, "Explicit inner lambda grid")->delimiter(',');
  fit->add_option("--agg-grid-size", fit_args.agg_grid_size, "Aggregation grid length");
  auto* agg_opt = fit->add_option("--agg-lambda", agg_lambda, "Fixed aggregation lambda");
  fit->add_option("--scad-a", fit_args.scad_a, "SCAD shape parameter (> 2)");
  fit->add_flag("--intercept", fit_args.intercept, "Add an unpenalized intercept");
  fit->add_flag("--standardize", fit_args.standardize, "Scale covariates, report original scale");

  std::filesystem::path describe_path;
  std::uint64_t describe_seed = 1;
  std::size_t describe_boot = 1000;
  auto* describe = app.add_subcommand("describe", "Summarize a clustered CSV file");
  describe->add_option("data", describe_path, "CSV file")->required();
  describe->add_option("--seed", describe_seed, "Bootstrap seed");
  describe->add_option("--bootstrap", describe_boot, "Bootstrap replicates");

  pqlwcr::GenerateArgs gen_args;
  auto* generate = app.add_subcommand("generate", "Export a simulated dataset as CSV");
  generate->add_option("--example", gen_args.example, "Design 1-4")->check(CLI::Range(1, 4));
  generate->add_option("--n", gen_args.n, "Clusters");
  generate->add_option("--p", gen_args.p, "Covariates");
  generate->add_option("--rho", gen_args.rho, "Within-cluster correlation");
  generate->add_option("--rho-x", gen_args.rho_x, "Covariate autocorrelation");
  generate->add_option("--seed", gen_args.seed, "Seed");
  generate->add_option("--ex2-u-max-size", gen_args.ex2_u_max_size,
                       "Example 2: largest cluster size with U = 1");
  generate->add_option("--out", gen_args.out_path, "Output file (default stdout)");

  std::filesystem::path summarize_path;
  auto* summarize = app.add_subcommand("summarize", "Recompute summaries from replicates.csv");
  summarize->add_option("records", summarize_path, "replicates.csv")->required();

  CLI11_PARSE(app, argc, argv);

  if (*simulate) {
    return pqlwcr::cmd_simulate(sim_config, sim_out, sim_seed, sim_threads, std::cout,
                                std::cerr);
  }
  if (*fit) {
    if (agg_opt->count() > 0) fit_args.agg_lambda = agg_lambda;
    return pqlwcr::cmd_fit(fit_args, std::cout, std::cerr);
  }
  if (*describe) {
    return pqlwcr::cmd_describe(describe_path, describe_seed, describe_boot, std::cout,
                                std::cerr);
  }
  if (*generate) return pqlwcr::cmd_generate(gen_args, std::cout, std::cerr);
  return pqlwcr::cmd_summarize(summarize_path, std::cout, std::cerr);
}
