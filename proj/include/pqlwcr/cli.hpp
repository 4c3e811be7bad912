#pragma once

// Command implementations behind the `pqlwcr` executable. Each returns the
// process exit status and writes diagnostics only to `err`.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pqlwcr/bench.hpp"

namespace pqlwcr {

inline constexpr const char* kSoftwareVersion = "0.1.0";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimConfig {
  std::vector<int> examples{1};
  std::size_t n = 200;
  std::vector<std::size_t> p{50};
  std::vector<double> rho{0.5};
  double rho_x = 0.4;
  std::vector<Method> methods{Method::PqlWcr, Method::NaiveLasso};
  std::size_t replications = 20;
  std::size_t k = 100;
  std::uint64_t master_seed = 1;
  std::size_t lambda_grid_size = 50;
  double lambda_min_ratio = 0.01;
  std::size_t agg_grid_size = 30;
  double scad_a = 3.7;
  std::size_t ex2_u_max_size = 6;
};

// Keys: example, n, p, rho, rho_x, methods, replications, k, master_seed,
// lambda_grid_size, lambda_min_ratio, agg_grid_size, scad_a, ex2_u_max_size.
// example, p, rho and methods accept comma-separated lists. Unknown keys throw.
SimConfig parse_sim_config(std::istream& in, const std::string& source = "<config>");

int cmd_simulate(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                 std::optional<std::uint64_t> seed, unsigned threads, std::ostream& out,
                 std::ostream& err);

struct FitArgs {
  std::filesystem::path data_path;
  std::string family = "gaussian";
  std::filesystem::path out_dir = ".";
  std::size_t k = 500;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::size_t lambda_grid_size = 50;
  double lambda_min_ratio = 0.01;
  std::vector<double> lambdas;  // explicit inner grid, overrides the default path
  std::size_t agg_grid_size = 30;
  std::optional<double> agg_lambda;  // fixed aggregation lambda, skips tuning
  double scad_a = 3.7;
  bool intercept = false;
  bool standardize = false;
};

int cmd_fit(const FitArgs& args, std::ostream& out, std::ostream& err);

int cmd_describe(const std::filesystem::path& data_path, std::uint64_t seed,
                 std::size_t bootstrap, std::ostream& out, std::ostream& err);

struct GenerateArgs {
  int example = 1;
  std::size_t n = 200;
  std::size_t p = 50;
  double rho = 0.5;
  double rho_x = 0.4;
  std::uint64_t seed = 1;
  std::size_t ex2_u_max_size = 6;
  std::filesystem::path out_path;
};

int cmd_generate(const GenerateArgs& args, std::ostream& out, std::ostream& err);

// Rebuilds the summary table from a replicates.csv without refitting.
int cmd_summarize(const std::filesystem::path& records_path, std::ostream& out,
                  std::ostream& err);

}  // namespace pqlwcr
