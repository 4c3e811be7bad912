#include "pqlwcr/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "pqlwcr/datagen.hpp"
#include "pqlwcr/io.hpp"
#include "pqlwcr/kernels.hpp"
#include "pqlwcr/wcr.hpp"

namespace pqlwcr {

namespace {

using json = nlohmann::json;

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

template <class T>
T parse_scalar(const std::string& key, const std::string& text) {
  std::istringstream is(text);
  T value{};
  is >> value;
  if (is.fail() || !(is >> std::ws).eof()) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw ConfigError("config key '" + key + "': not finite");
  }
  return value;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  for (const std::string& item : split_list(text)) out.push_back(parse_scalar<T>(key, item));
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

json config_json(const SimConfig& c) {
  json j;
  j["examples"] = c.examples;
  j["n"] = c.n;
  j["p"] = c.p;
  j["rho"] = c.rho;
  j["rho_x"] = c.rho_x;
  std::vector<std::string> methods;
  for (Method m : c.methods) methods.emplace_back(method_name(m));
  j["methods"] = methods;
  j["replications"] = c.replications;
  j["k"] = c.k;
  j["master_seed"] = c.master_seed;
  j["lambda_grid_size"] = c.lambda_grid_size;
  j["lambda_min_ratio"] = c.lambda_min_ratio;
  j["agg_grid_size"] = c.agg_grid_size;
  j["scad_a"] = c.scad_a;
  j["ex2_u_max_size"] = c.ex2_u_max_size;
  return j;
}

void write_manifest(const std::filesystem::path& path, const json& manifest) {
  std::ofstream out(path);
  out << manifest.dump(2) << '\n';
}

std::string display_approach(Method m) {
  return m == Method::PqlWcr ? "PQL_WCR" : "naive lasso";
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

SimConfig parse_sim_config(std::istream& in, const std::string& source) {
  const std::map<std::string, std::string> kv = read_key_values(in, source);
  SimConfig c;
  for (const auto& [key, value] : kv) {
    if (key == "example") {
      c.examples = parse_list<int>(key, value);
      for (int e : c.examples) {
        if (e < 1 || e > 4) throw ConfigError("config key 'example': unknown example " + std::to_string(e));
      }
    } else if (key == "n") {
      c.n = parse_scalar<std::size_t>(key, value);
    } else if (key == "p") {
      c.p = parse_list<std::size_t>(key, value);
    } else if (key == "rho") {
      c.rho = parse_list<double>(key, value);
      for (double r : c.rho) {
        if (!(r >= 0.0 && r < 1.0)) throw ConfigError("config key 'rho': values must lie in [0, 1)");
      }
    } else if (key == "rho_x") {
      c.rho_x = parse_scalar<double>(key, value);
    } else if (key == "methods") {
      c.methods.clear();
      for (const std::string& m : split_list(value)) {
        try {
          c.methods.push_back(parse_method(m));
        } catch (const std::invalid_argument& e) {
          throw ConfigError("config key 'methods': " + std::string(e.what()));
        }
      }
    } else if (key == "replications") {
      c.replications = parse_scalar<std::size_t>(key, value);
    } else if (key == "k") {
      c.k = parse_scalar<std::size_t>(key, value);
    } else if (key == "master_seed") {
      c.master_seed = parse_scalar<std::uint64_t>(key, value);
    } else if (key == "lambda_grid_size") {
      c.lambda_grid_size = parse_scalar<std::size_t>(key, value);
    } else if (key == "lambda_min_ratio") {
      c.lambda_min_ratio = parse_scalar<double>(key, value);
    } else if (key == "agg_grid_size") {
      c.agg_grid_size = parse_scalar<std::size_t>(key, value);
    } else if (key == "scad_a") {
      c.scad_a = parse_scalar<double>(key, value);
    } else if (key == "ex2_u_max_size") {
      c.ex2_u_max_size = parse_scalar<std::size_t>(key, value);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  if (c.n == 0) throw ConfigError("config key 'n': must be at least 1");
  if (c.replications == 0) throw ConfigError("config key 'replications': must be at least 1");
  if (c.k == 0) throw ConfigError("config key 'k': must be at least 1");
  if (c.lambda_grid_size == 0) throw ConfigError("config key 'lambda_grid_size': must be at least 1");
  if (c.agg_grid_size == 0) throw ConfigError("config key 'agg_grid_size': must be at least 1");
  if (!(c.lambda_min_ratio > 0.0 && c.lambda_min_ratio <= 1.0)) {
    throw ConfigError("config key 'lambda_min_ratio': must lie in (0, 1]");
  }
  if (!(c.scad_a > 2.0)) throw ConfigError("config key 'scad_a': must exceed 2");
  if (!(std::abs(c.rho_x) < 1.0)) throw ConfigError("config key 'rho_x': must satisfy |rho_x| < 1");
  for (std::size_t p : c.p) {
    if (p == 0) throw ConfigError("config key 'p': must be at least 1");
  }
  if (c.methods.empty()) throw ConfigError("config key 'methods': empty list");
  return c;
}

int cmd_simulate(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                 std::optional<std::uint64_t> seed, unsigned threads, std::ostream& out,
                 std::ostream& err) {
  const auto wall_start = std::chrono::steady_clock::now();
  const std::string started = utc_timestamp();
  try {
    std::ifstream in(config_path);
    if (!in) {
      err << "error: cannot read config " << config_path.string() << '\n';
      return 2;
    }
    std::stringstream raw;
    raw << in.rdbuf();
    std::istringstream parse_in(raw.str());
    SimConfig config = parse_sim_config(parse_in, config_path.string());
    if (seed) config.master_seed = *seed;

    std::filesystem::create_directories(out_dir);
    std::ofstream summary_csv = open_output(out_dir / "summary.csv");
    std::ofstream records_csv = open_output(out_dir / "replicates.csv");
    summary_csv << "schema_version,example,n,p,rho,approach,replications,k,tp_mean,tp_sd,"
                   "fp_mean,fp_sd,cr,cr_sd,mse_mean,mse_sd\n";
    write_records_header(records_csv);

    std::ostringstream table;
    table << std::left << std::setw(6) << "Ex" << std::setw(6) << "p" << std::setw(6) << "rho"
          << std::setw(14) << "Approach" << std::setw(14) << "TP" << std::setw(14) << "FP"
          << std::setw(14) << "CR" << "MSE\n";

    BenchOptions opts;
    opts.K = config.k;
    opts.agg_grid_size = config.agg_grid_size;
    opts.threads = std::max(1u, threads);
    opts.solver.grid_size = config.lambda_grid_size;
    opts.solver.lambda_min_ratio = config.lambda_min_ratio;
    opts.solver.scad_a = config.scad_a;

    json timings = json::array();
    std::size_t cell = 0;
    for (int example : config.examples) {
      for (std::size_t p : config.p) {
        for (double rho : config.rho) {
          ScenarioConfig scenario;
          scenario.example_id = example;
          scenario.n = config.n;
          scenario.p = p;
          scenario.rho = rho;
          scenario.rho_x = config.rho_x;
          scenario.ex2_u_max_size = config.ex2_u_max_size;
          const std::uint64_t cell_seed = derive_seed(config.master_seed, cell++);
          for (Method method : config.methods) {
            err << "running example " << example << " p=" << p << " rho=" << rho << ' '
                << method_name(method) << " (R=" << config.replications << ")\n";
            const ReplicationRun run =
                run_replications(scenario, method, config.replications, cell_seed, opts);
            const MetricsReport& r = run.report;
            summary_csv << kSchemaVersion << ',' << example << ',' << config.n << ',' << p << ','
                        << format_number(rho) << ',' << method_name(method) << ','
                        << r.replications << ',' << (method == Method::PqlWcr ? config.k : 1)
                        << ',' << format_number(r.tp_mean) << ',' << format_number(r.tp_sd)
                        << ',' << format_number(r.fp_mean) << ',' << format_number(r.fp_sd)
                        << ',' << format_number(r.cr) << ',' << format_number(r.cr_sd) << ','
                        << format_number(r.mse_mean) << ',' << format_number(r.mse_sd) << '\n';
            for (const ReplicateRecord& rec : run.records) {
              write_record(records_csv, {example, config.n, p, rho,
                                         std::string(method_name(method)), rec});
            }
            std::ostringstream rho_text;
            rho_text << rho;
            table << std::left << std::setw(6) << example << std::setw(6) << p << std::setw(6)
                  << rho_text.str() << std::setw(14) << display_approach(method) << std::setw(14)
                  << format_mean_sd(r.tp_mean, r.tp_sd, 2) << std::setw(14)
                  << format_mean_sd(r.fp_mean, r.fp_sd, 2) << std::setw(14)
                  << format_mean_sd(r.cr, r.cr_sd, 2) << format_mean_sd(r.mse_mean, r.mse_sd, 3)
                  << '\n';
            json t;
            t["example"] = example;
            t["p"] = p;
            t["rho"] = rho;
            t["method"] = method_name(method);
            t["wall_seconds"] = r.wall_time;
            std::vector<double> per;
            for (const ReplicateRecord& rec : run.records) per.push_back(rec.seconds);
            t["replicate_seconds"] = per;
            timings.push_back(t);
          }
        }
      }
    }
    {
      std::ofstream summary_txt = open_output(out_dir / "summary.txt");
      summary_txt << "# schema_version " << kSchemaVersion << '\n' << table.str();
    }
    out << table.str();

    json manifest;
    manifest["schema_version"] = kSchemaVersion;
    manifest["command"] = "simulate";
    manifest["software_version"] = kSoftwareVersion;
    manifest["config_path"] = config_path.string();
    manifest["config_text"] = raw.str();
    manifest["config"] = config_json(config);
    manifest["master_seed"] = config.master_seed;
    manifest["threads"] = opts.threads;
    manifest["kernels"] = std::string(kernels::active().name);
    manifest["started_utc"] = started;
    manifest["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    manifest["timings"] = timings;
    manifest["outputs"] = {"summary.csv", "summary.txt", "replicates.csv", "manifest.json"};
    write_manifest(out_dir / "manifest.json", manifest);
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int cmd_fit(const FitArgs& args, std::ostream& out, std::ostream& err) {
  const auto wall_start = std::chrono::steady_clock::now();
  const std::string started = utc_timestamp();
  try {
    ModelFamily family;
    if (args.family == "gaussian") {
      family = ModelFamily::gaussian();
    } else if (args.family == "binomial") {
      family = ModelFamily::binomial();
    } else {
      err << "error: family must be gaussian or binomial\n";
      return 2;
    }
    LabeledDataset loaded = read_dataset_csv(args.data_path);
    const Dataset& raw = loaded.data;
    if (family == ModelFamily::binomial()) {
      for (std::size_t obs = 0; obs < raw.num_obs(); ++obs) {
        const double y = raw.response(obs);
        if (y != 0.0 && y != 1.0) {
          err << "error: binomial responses must be 0 or 1 (observation " << obs + 1
              << " has " << format_number(y) << ")\n";
          return 1;
        }
      }
    }

    // Optional intercept column and column scaling.
    const std::size_t lead = args.intercept ? 1 : 0;
    const std::size_t p = raw.dim() + lead;
    std::vector<std::string> names;
    if (args.intercept) names.emplace_back("(intercept)");
    names.insert(names.end(), loaded.covariate_names.begin(), loaded.covariate_names.end());
    Vector scale(p, 1.0);
    if (args.standardize) {
      const double m = static_cast<double>(raw.num_obs());
      for (std::size_t d = 0; d < raw.dim(); ++d) {
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t obs = 0; obs < raw.num_obs(); ++obs) {
          const double v = raw.row(obs)[d];
          s1 += v;
          s2 += v * v;
        }
        const double var = s2 / m - (s1 / m) * (s1 / m);
        if (var > 0.0) scale[d + lead] = std::sqrt(var);
      }
    }
    Vector x;
    x.reserve(raw.num_obs() * p);
    for (std::size_t obs = 0; obs < raw.num_obs(); ++obs) {
      if (args.intercept) x.push_back(1.0);
      const auto row = raw.row(obs);
      for (std::size_t d = 0; d < raw.dim(); ++d) x.push_back(row[d] / scale[d + lead]);
    }
    const std::vector<std::size_t> sizes(raw.cluster_sizes().begin(), raw.cluster_sizes().end());
    const Vector y(raw.responses().begin(), raw.responses().end());
    const Dataset data(p, sizes, y, std::move(x));

    WcrOptions wcr;
    wcr.threads = std::max(1u, args.threads);
    wcr.solver.penalty = PenaltyKind::Scad;
    wcr.solver.scad_a = args.scad_a;
    wcr.solver.grid_size = args.lambda_grid_size;
    wcr.solver.lambda_min_ratio = args.lambda_min_ratio;
    wcr.solver.unpenalized_leading = lead;
    if (!args.lambdas.empty()) {
      wcr.solver.lambda_grid = args.lambdas;
      std::sort(wcr.solver.lambda_grid.begin(), wcr.solver.lambda_grid.end(),
                std::greater<>());
    }
    const WcrEnsemble ensemble = run_wcr(data, family, args.k, wcr, args.seed);
    for (std::size_t k : ensemble.dropped) {
      err << "warning: resample " << k << " diverged and was dropped\n";
    }

    AggregateResult agg;
    if (args.agg_lambda) {
      if (!(*args.agg_lambda >= 0.0)) {
        err << "error: --agg-lambda must be non-negative\n";
        return 2;
      }
      Vector lambdas(p, *args.agg_lambda);
      for (std::size_t d = 0; d < lead; ++d) lambdas[d] = 0.0;
      agg = aggregate(ensemble, lambdas);
    } else {
      const Vector grid =
          default_aggregation_grid(raw.dim(), data.num_clusters(), args.agg_grid_size);
      agg = tune_aggregation(ensemble, data, family, grid, lead);
    }
    for (std::size_t d = 0; d < p; ++d) agg.beta_hat[d] /= scale[d];

    std::filesystem::create_directories(args.out_dir);
    {
      std::ofstream est = open_output(args.out_dir / "estimates.csv");
      est << "schema_version,coordinate,name,beta_hat,selection_frequency\n";
      for (std::size_t d = 0; d < p; ++d) {
        est << kSchemaVersion << ',' << d + 1 << ',' << names[d] << ','
            << format_number(agg.beta_hat[d]) << ','
            << format_number(agg.selection_frequency[d]) << '\n';
      }
      std::ofstream sel = open_output(args.out_dir / "selected.csv");
      sel << "schema_version,coordinate,name\n";
      for (std::size_t d : agg.support) {
        sel << kSchemaVersion << ',' << d + 1 << ',' << names[d] << '\n';
      }
    }

    out << "clusters: " << data.num_clusters() << "  observations: " << data.num_obs()
        << "  covariates: " << raw.dim() << '\n';
    out << "resamples: " << ensemble.k_effective() << " of " << ensemble.K << '\n';
    const double lam = agg.lambda_agg.empty() ? 0.0 : agg.lambda_agg.back();
    out << "aggregation lambda: " << format_number(lam) << '\n';
    out << "selected (" << agg.support.size() << "):";
    for (std::size_t d : agg.support) out << ' ' << names[d];
    out << '\n';

    json manifest;
    manifest["schema_version"] = kSchemaVersion;
    manifest["command"] = "fit";
    manifest["software_version"] = kSoftwareVersion;
    manifest["data_path"] = args.data_path.string();
    manifest["family"] = args.family;
    manifest["k"] = args.k;
    manifest["seed"] = args.seed;
    manifest["threads"] = wcr.threads;
    manifest["lambda_grid_size"] = args.lambda_grid_size;
    manifest["lambda_min_ratio"] = args.lambda_min_ratio;
    manifest["lambdas"] = args.lambdas;
    manifest["agg_grid_size"] = args.agg_grid_size;
    if (args.agg_lambda) manifest["agg_lambda"] = *args.agg_lambda;
    manifest["scad_a"] = args.scad_a;
    manifest["intercept"] = args.intercept;
    manifest["standardize"] = args.standardize;
    manifest["dropped_resamples"] = ensemble.dropped;
    manifest["kernels"] = std::string(kernels::active().name);
    manifest["started_utc"] = started;
    manifest["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    manifest["outputs"] = {"estimates.csv", "selected.csv", "manifest.json"};
    write_manifest(args.out_dir / "manifest.json", manifest);
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

namespace {

double pearson(const Vector& a, const Vector& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return std::nan("");
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

int cmd_describe(const std::filesystem::path& data_path, std::uint64_t seed,
                 std::size_t bootstrap, std::ostream& out, std::ostream& err) {
  try {
    const LabeledDataset loaded = read_dataset_csv(data_path);
    const Dataset& data = loaded.data;
    const std::size_t n = data.num_clusters();
    out << "clusters (n): " << n << '\n';
    out << "covariates (p): " << data.dim() << '\n';
    out << "observations: " << data.num_obs() << '\n';

    std::map<std::size_t, std::size_t> hist;
    for (std::size_t s : data.cluster_sizes()) ++hist[s];
    out << "cluster sizes:\n";
    for (const auto& [size, count] : hist) {
      char frac[32];
      std::snprintf(frac, sizeof(frac), "%.4f", static_cast<double>(count) / static_cast<double>(n));
      out << "  " << size << ": " << count << " (" << frac << ")\n";
    }

    Vector sizes(n), means(n);
    for (std::size_t i = 0; i < n; ++i) {
      sizes[i] = static_cast<double>(data.cluster_size(i));
      double s = 0.0;
      for (std::size_t j = 0; j < data.cluster_size(i); ++j) s += data.response(data.offset(i) + j);
      means[i] = s / sizes[i];
    }
    const double r = n >= 3 ? pearson(sizes, means) : std::nan("");
    if (!std::isfinite(r)) {
      out << "ICS screen: suppressed (needs at least 3 clusters with varying sizes and mean "
             "responses)\n";
      return 0;
    }
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    Vector draws;
    Vector bs(n), bm(n);
    for (std::size_t b = 0; b < bootstrap; ++b) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = pick(rng);
        bs[i] = sizes[k];
        bm[i] = means[k];
      }
      const double rb = pearson(bs, bm);
      if (std::isfinite(rb)) draws.push_back(rb);
    }
    char line[160];
    if (draws.size() < 20) {
      std::snprintf(line, sizeof(line), "ICS screen: corr(size, mean response) = %.4f "
                    "(bootstrap interval unavailable)\n", r);
      out << line;
      return 0;
    }
    std::sort(draws.begin(), draws.end());
    const auto quantile = [&](double q) {
      const double pos = q * static_cast<double>(draws.size() - 1);
      const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
      const std::size_t hi = std::min(lo + 1, draws.size() - 1);
      return draws[lo] + (pos - static_cast<double>(lo)) * (draws[hi] - draws[lo]);
    };
    const double lo = quantile(0.025), hi = quantile(0.975);
    std::snprintf(line, sizeof(line),
                  "ICS screen: corr(size, mean response) = %.4f, 95%% bootstrap interval "
                  "[%.4f, %.4f] (B=%zu)\n",
                  r, lo, hi, draws.size());
    out << line;
    out << (lo <= 0.0 && hi >= 0.0 ? "  interval covers 0: no evidence of informative size\n"
                                   : "  interval excludes 0: cluster size may be informative\n");
    out << "  (advisory only; informative size can act through slopes as well as means)\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int cmd_generate(const GenerateArgs& args, std::ostream& out, std::ostream& err) {
  try {
    ScenarioConfig config;
    config.example_id = args.example;
    config.n = args.n;
    config.p = args.p;
    config.rho = args.rho;
    config.rho_x = args.rho_x;
    config.seed = args.seed;
    config.ex2_u_max_size = args.ex2_u_max_size;
    Rng rng(args.seed);
    const GeneratedData gen = gen_dataset(config, rng);
    if (args.out_path.empty()) {
      write_dataset_csv(out, gen.data);
    } else {
      std::ofstream file = open_output(args.out_path);
      write_dataset_csv(file, gen.data);
    }
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int cmd_summarize(const std::filesystem::path& records_path, std::ostream& out,
                  std::ostream& err) {
  try {
    std::ifstream in(records_path);
    if (!in) {
      err << "error: cannot read " << records_path.string() << '\n';
      return 2;
    }
    const std::vector<RecordRow> rows = read_records(in, records_path.string());
    // Group consecutive rows sharing (example, n, p, rho, method).
    out << "example,n,p,rho,approach,replications,tp_mean,tp_sd,fp_mean,fp_sd,cr,cr_sd,"
           "mse_mean,mse_sd\n";
    std::size_t start = 0;
    while (start < rows.size()) {
      std::size_t end = start;
      std::vector<ReplicateRecord> group;
      while (end < rows.size() && rows[end].example == rows[start].example &&
             rows[end].n == rows[start].n && rows[end].p == rows[start].p &&
             rows[end].rho == rows[start].rho && rows[end].method == rows[start].method) {
        group.push_back(rows[end].record);
        ++end;
      }
      const MetricsReport r = summarize(group);
      const RecordRow& h = rows[start];
      out << h.example << ',' << h.n << ',' << h.p << ',' << format_number(h.rho) << ','
          << h.method << ',' << r.replications << ',' << format_number(r.tp_mean) << ','
          << format_number(r.tp_sd) << ',' << format_number(r.fp_mean) << ','
          << format_number(r.fp_sd) << ',' << format_number(r.cr) << ','
          << format_number(r.cr_sd) << ',' << format_number(r.mse_mean) << ','
          << format_number(r.mse_sd) << '\n';
      start = end;
    }
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace pqlwcr
