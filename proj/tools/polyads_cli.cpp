#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "polyads/baseline.hpp"
#include "polyads/enumeration.hpp"
#include "polyads/estimator.hpp"
#include "polyads/formula.hpp"
#include "polyads/graph.hpp"
#include "polyads/io.hpp"
#include "polyads/kernels.hpp"
#include "polyads/parallel.hpp"
#include "polyads/simulate.hpp"
#include "polyads/variance.hpp"
#include "polyads/version.hpp"

namespace {

using polyads::format_double;

class PhaseTimer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t0_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ =
      std::chrono::steady_clock::now();
};

// Wall times leak scheduling noise, so deterministic outputs mask them and
// the measured values go to stderr instead.
std::string time_field(const std::string& name, double seconds,
                       bool deterministic) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", seconds);
  if (!deterministic) return buf;
  std::cerr << "timing." << name << "=" << buf << "\n";
  return "na";
}

struct Report {
  std::ostringstream body;

  void kv(const std::string& k, const std::string& v) {
    body << k << "=" << v << "\n";
  }
  void kv(const std::string& k, const char* v) { kv(k, std::string(v)); }
  void kv(const std::string& k, double v) { kv(k, format_double(v)); }
  void kv(const std::string& k, int v) { kv(k, std::to_string(v)); }
  void kv(const std::string& k, int64_t v) { kv(k, std::to_string(v)); }
  void kv(const std::string& k, uint64_t v) { kv(k, std::to_string(v)); }
  void kv(const std::string& k, bool v) { kv(k, v ? "true" : "false"); }

  void write(const std::string& path) const {
    if (path.empty()) {
      std::cout << body.str();
      std::cout.flush();
      return;
    }
    std::ofstream out(path);
    if (!out) throw polyads::InputError("cannot write " + path);
    out << body.str();
    if (!out) throw polyads::InputError("failed writing " + path);
  }
};

std::string sanitize_note(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

struct CommonOpts {
  int workers = polyads::default_workers();
  bool deterministic = false;
  std::string output;
  std::string config_path;
};

void add_common(CLI::App* cmd, CommonOpts* opts) {
  cmd->add_option("--workers", opts->workers,
                  "Worker threads (default: POLYADS_WORKERS or 1)");
  cmd->add_flag("--deterministic,!--no-deterministic", opts->deterministic,
                "Byte-stable outputs: fixed reduction order, timings as na");
  cmd->add_option("--output", opts->output,
                  "Report file (default: stdout)");
  cmd->add_option("--config", opts->config_path,
                  "key=value file; command-line flags override it");
}

void echo_common(Report& rep, const std::string& command,
                 const CommonOpts& opts) {
  rep.kv("version", polyads::kVersion);
  rep.kv("command", command);
  rep.kv("config.workers", opts.workers);
  rep.kv("config.deterministic", opts.deterministic);
  rep.kv("config.kernels", polyads::kernels::isa_name());
}

// ---------------------------------------------------------------- fit -----

struct FitOpts {
  CommonOpts common;
  std::string edges;
  std::string covariates;
  std::vector<std::string> attributes;  // dim=path
  int max_iterations = 50;
  double tolerance = 1e-8;
  int truncation = 100;
  double ridge = 0.0;
  bool damped = false;
  double ci_quantile = 1.96;
  uint64_t max_records = 100'000'000;
  uint64_t max_pair_touches = 1'000'000'000;
};

std::shared_ptr<polyads::CovariateProvider> load_covariates(
    const FitOpts& opts, const polyads::EdgeFileData& ed, Report& rep) {
  const std::string formula_prefix = "formula:";
  if (opts.covariates.rfind(formula_prefix, 0) == 0) {
    std::vector<polyads::AttributeTable> tables(ed.dims);
    for (const std::string& spec : opts.attributes) {
      size_t eq = spec.find('=');
      if (eq == std::string::npos)
        throw polyads::InputError("--attributes expects dim=path, got '" +
                                  spec + "'");
      int64_t d = polyads::parse_int(spec.substr(0, eq), "--attributes");
      if (d < 1 || d > ed.dims)
        throw polyads::InputError("--attributes dimension " +
                                  std::to_string(d) + " out of range");
      tables[d - 1] = polyads::read_attribute_file(
          spec.substr(eq + 1), ed.id_maps[static_cast<size_t>(d) - 1]);
      rep.kv("data.attributes." + std::to_string(d), spec.substr(eq + 1));
    }
    auto provider = std::make_shared<polyads::FormulaCovariates>(
        opts.covariates.substr(formula_prefix.size()), std::move(tables));
    for (size_t k = 0; k < provider->feature_texts().size(); ++k)
      rep.kv("config.feature." + std::to_string(k + 1),
             provider->feature_texts()[k]);
    return provider;
  }
  polyads::CovariateFileData cf =
      polyads::read_covariate_file(opts.covariates, ed.id_maps);
  rep.kv("data.covariate_rows", cf.rows);
  rep.kv("data.covariate_rows_dropped", cf.dropped_rows);
  return cf.covariates;
}

int run_fit(const FitOpts& opts) {
  Report rep;
  echo_common(rep, "fit", opts.common);
  rep.kv("config.edges", opts.edges);
  rep.kv("config.covariates", opts.covariates);
  rep.kv("config.max_iterations", opts.max_iterations);
  rep.kv("config.gradient_tolerance", opts.tolerance);
  rep.kv("config.truncation_L", opts.truncation);
  rep.kv("config.ridge_epsilon", opts.ridge);
  rep.kv("config.damped", opts.damped);
  rep.kv("config.ci_quantile", opts.ci_quantile);
  rep.kv("config.max_records", opts.max_records);
  rep.kv("config.max_pair_touches", opts.max_pair_touches);

  polyads::EdgeFileData ed = polyads::read_edge_file(opts.edges);
  if (ed.dims < 2)
    throw polyads::InputError("fit needs at least 2 index columns");
  std::vector<int32_t> sizes;
  for (const auto& ids : ed.id_maps)
    sizes.push_back(static_cast<int32_t>(ids.size()));
  polyads::SparseCountGraph graph(sizes, ed.entries);
  rep.kv("data.dims", ed.dims);
  for (int d = 0; d < ed.dims; ++d)
    rep.kv("data.n" + std::to_string(d + 1), static_cast<int64_t>(sizes[d]));
  rep.kv("data.num_edges", graph.num_edges());
  rep.kv("data.total_count", graph.total_count());
  rep.kv("data.num_cells", graph.num_cells());

  auto cov = load_covariates(opts, ed, rep);
  rep.kv("data.num_features", cov->width());

  PhaseTimer t_enum;
  polyads::EnumerationOptions eopts;
  eopts.max_records = opts.max_records;
  eopts.workers = opts.common.workers;
  polyads::EnumerationResult enumeration =
      polyads::enumerate_active(graph, *cov, eopts);
  double enum_seconds = t_enum.seconds();

  rep.kv("result.n_canonical",
         static_cast<uint64_t>(enumeration.records.size()));
  rep.kv("result.n_active", enumeration.n_active);
  rep.kv("counters.inner_loop_count", enumeration.inner_loop_count);

  polyads::FitConfig fit_config;
  fit_config.max_iterations = opts.max_iterations;
  fit_config.gradient_tolerance = opts.tolerance;
  fit_config.truncation_L = opts.truncation;
  fit_config.ridge_epsilon = opts.ridge;
  fit_config.damped = opts.damped;
  fit_config.deterministic_reduction = true;
  fit_config.workers = opts.common.workers;

  PhaseTimer t_newton;
  polyads::FitResult fit =
      polyads::fit(enumeration.records, cov->width(), fit_config);
  double newton_seconds = t_newton.seconds();

  rep.kv("result.converged", fit.converged);
  rep.kv("result.iterations", fit.iterations);
  rep.kv("result.gradient_norm", fit.gradient_norm);
  for (int k = 0; k < fit.beta_hat.size(); ++k)
    rep.kv("result.beta_hat." + std::to_string(k + 1), fit.beta_hat[k]);
  for (size_t i = 0; i < fit.trace.size(); ++i) {
    const std::string prefix = "trace." + std::to_string(i);
    rep.kv(prefix + ".loss", fit.trace[i].loss);
    rep.kv(prefix + ".grad_norm", fit.trace[i].grad_inf_norm);
    for (int k = 0; k < fit.trace[i].beta.size(); ++k)
      rep.kv(prefix + ".beta." + std::to_string(k + 1), fit.trace[i].beta[k]);
  }

  double variance_seconds = 0.0;
  if (fit.converged) {
    PhaseTimer t_var;
    polyads::PolyadIncidence incidence =
        polyads::build_incidence(enumeration.records);
    polyads::VarianceConfig vconfig;
    vconfig.ci_quantile = opts.ci_quantile;
    vconfig.truncation_L = opts.truncation;
    vconfig.max_pair_touches = opts.max_pair_touches;
    vconfig.deterministic_reduction = true;
    vconfig.workers = opts.common.workers;
    polyads::CovarianceResult cov_result = polyads::covariance(
        enumeration.records, incidence, fit.beta_hat, fit.hessian, vconfig);
    variance_seconds = t_var.seconds();

    const int p = static_cast<int>(fit.beta_hat.size());
    for (int r = 0; r < p; ++r)
      for (int c = 0; c < p; ++c) {
        std::string suffix =
            "." + std::to_string(r + 1) + "." + std::to_string(c + 1);
        rep.kv("result.sigma" + suffix, cov_result.sigma_hat(r, c));
        if (!cov_result.prime_skipped)
          rep.kv("result.sigma_prime" + suffix,
                 cov_result.sigma_prime_hat(r, c));
      }
    auto ci_sigma = polyads::confidence_intervals(
        cov_result.sigma_hat, fit.beta_hat, opts.ci_quantile);
    for (int k = 0; k < p; ++k) {
      rep.kv("result.ci_sigma." + std::to_string(k + 1) + ".lower",
             ci_sigma[static_cast<size_t>(k)].first);
      rep.kv("result.ci_sigma." + std::to_string(k + 1) + ".upper",
             ci_sigma[static_cast<size_t>(k)].second);
    }
    if (!cov_result.prime_skipped) {
      auto ci_prime = polyads::confidence_intervals(
          cov_result.sigma_prime_hat, fit.beta_hat, opts.ci_quantile);
      for (int k = 0; k < p; ++k) {
        rep.kv("result.ci_sigma_prime." + std::to_string(k + 1) + ".lower",
               ci_prime[static_cast<size_t>(k)].first);
        rep.kv("result.ci_sigma_prime." + std::to_string(k + 1) + ".upper",
               ci_prime[static_cast<size_t>(k)].second);
      }
    }
    rep.kv("counters.score_touches", cov_result.score_touches);
    rep.kv("counters.pair_touches", cov_result.pair_touches);
    rep.kv("result.sigma_prime_skipped", cov_result.prime_skipped);
    for (size_t k = 0; k < cov_result.warnings.size(); ++k)
      rep.kv("warning.variance." + std::to_string(k + 1),
             cov_result.warnings[k]);
  }

  for (size_t k = 0; k < fit.warnings.size(); ++k)
    rep.kv("warning.fit." + std::to_string(k + 1), fit.warnings[k]);

  bool det = opts.common.deterministic;
  rep.kv("timing.enumeration_s",
         time_field("enumeration_s", enum_seconds, det));
  rep.kv("timing.newton_s", time_field("newton_s", newton_seconds, det));
  rep.kv("timing.variance_s",
         fit.converged ? time_field("variance_s", variance_seconds, det)
                       : std::string("na"));

  rep.write(opts.common.output);
  return fit.converged ? 0 : 3;
}

// ----------------------------------------------------------- simulate -----

struct SimulateOpts {
  CommonOpts common;
  polyads::ThreeWayDesign design;
  std::string noise_name = "poisson";
  double density = -1.0;
  bool sparse_regime = false;
  bool intercept_given = false;
  uint64_t replication = 0;
  std::string out_edges;
  std::string out_covariates;
};

int run_simulate(SimulateOpts& opts) {
  Report rep;
  echo_common(rep, "simulate", opts.common);

  if (opts.noise_name == "poisson")
    opts.design.noise = polyads::NoiseKind::poisson;
  else if (opts.noise_name == "negbin")
    opts.design.noise = polyads::NoiseKind::negbin;
  else
    throw polyads::InputError("--noise must be poisson or negbin");

  int chosen = (opts.density >= 0.0) + opts.sparse_regime +
               opts.intercept_given;
  if (chosen != 1)
    throw polyads::InputError(
        "pick exactly one of --density, --sparse-regime, --intercept");

  double target = opts.density;
  if (opts.sparse_regime) {
    double n = static_cast<double>(opts.design.n1) * opts.design.n2 *
               opts.design.n3;
    target = 4.0 * std::sqrt(n) / n;
  }

  double calibration_seconds = 0.0;
  if (!opts.intercept_given) {
    PhaseTimer t_cal;
    opts.design.intercept_c = polyads::calibrate_intercept(opts.design, target);
    calibration_seconds = t_cal.seconds();
    rep.kv("config.target_density", target);
  }

  rep.kv("config.n1", static_cast<int64_t>(opts.design.n1));
  rep.kv("config.n2", static_cast<int64_t>(opts.design.n2));
  rep.kv("config.n3", static_cast<int64_t>(opts.design.n3));
  rep.kv("config.beta_star", opts.design.beta_star);
  rep.kv("config.fe_std", opts.design.fe_std);
  rep.kv("config.ar_coef", opts.design.ar_coef);
  rep.kv("config.noise_scale", opts.design.noise_scale);
  rep.kv("config.intercept_c", opts.design.intercept_c);
  rep.kv("config.noise", opts.noise_name);
  if (opts.design.noise == polyads::NoiseKind::negbin)
    rep.kv("config.negbin_rate", opts.design.negbin_rate);
  rep.kv("config.seed", opts.design.seed);
  rep.kv("config.replication", opts.replication);

  polyads::SimulatedDataset ds =
      polyads::generate_three_way(opts.design, opts.replication);

  polyads::write_edge_file(opts.out_edges, ds.graph);
  polyads::write_covariate_file(opts.out_covariates, ds.graph.sizes(),
                                *ds.covariates);

  rep.kv("result.num_edges", ds.graph.num_edges());
  rep.kv("result.total_count", ds.graph.total_count());
  rep.kv("result.realized_density", ds.realized_density);
  rep.kv("result.true_beta", ds.true_beta[0]);
  rep.kv("result.edges_file", opts.out_edges);
  rep.kv("result.covariates_file", opts.out_covariates);
  if (!opts.intercept_given)
    rep.kv("timing.calibration_s",
           time_field("calibration_s", calibration_seconds,
                      opts.common.deterministic));

  rep.write(opts.common.output);
  return 0;
}

// -------------------------------------------------------------- bench -----

struct BenchOpts {
  CommonOpts common;
  std::vector<int> n1_list{30};
  std::vector<int> n2_list;
  int n3 = 5;
  std::vector<double> densities{0.1};
  std::string noise_name = "poisson";
  double negbin_rate = 0.1;
  double beta_star = 1.0;
  double fe_std = 0.25;
  double ar_coef = 0.5;
  double noise_scale = 0.25;
  int replications = 10;
  std::vector<std::string> estimators{"polyads", "ppml"};
  uint64_t seed = 0;
  int truncation = 100;
  std::string out_table;
  std::string out_long;
};

struct RepRow {
  bool ran = false;
  bool converged = false;
  double beta = std::nan("");
  double error = std::nan("");
  double ci_lo = std::nan("");
  double ci_hi = std::nan("");
  int covered = -1;  // -1 n/a, else 0/1
  int iterations = 0;
  double seconds = 0.0;
  std::string note;
};

RepRow run_polyads_rep(const polyads::SimulatedDataset& ds, double beta_star,
                       int truncation) {
  RepRow row;
  row.ran = true;
  PhaseTimer timer;
  try {
    polyads::EnumerationOptions eopts;
    polyads::EnumerationResult enumeration =
        polyads::enumerate_active(ds.graph, *ds.covariates, eopts);
    polyads::FitConfig config;
    config.truncation_L = truncation;
    polyads::FitResult fit =
        polyads::fit(enumeration.records, 1, config);
    row.converged = fit.converged;
    row.beta = fit.beta_hat[0];
    row.error = fit.beta_hat[0] - beta_star;
    row.iterations = fit.iterations;
    if (fit.converged) {
      polyads::PolyadIncidence incidence =
          polyads::build_incidence(enumeration.records);
      polyads::VarianceConfig vconfig;
      vconfig.truncation_L = truncation;
      polyads::CovarianceResult cov_result = polyads::covariance(
          enumeration.records, incidence, fit.beta_hat, fit.hessian, vconfig);
      row.ci_lo = cov_result.ci_95[0].first;
      row.ci_hi = cov_result.ci_95[0].second;
      row.covered = (row.ci_lo <= beta_star && beta_star <= row.ci_hi) ? 1 : 0;
    }
  } catch (const std::exception& e) {
    row.note = sanitize_note(e.what());
  }
  row.seconds = timer.seconds();
  return row;
}

RepRow run_ppml_rep(const polyads::SimulatedDataset& ds, double beta_star) {
  RepRow row;
  row.ran = true;
  PhaseTimer timer;
  try {
    polyads::FixedEffectStructure structure =
        polyads::FixedEffectStructure::max_structure(3);
    polyads::PpmlResult fit =
        polyads::ppml_fit(ds.graph, *ds.covariates, structure);
    row.converged = fit.converged;
    row.beta = fit.beta_hat[0];
    row.error = fit.beta_hat[0] - beta_star;
    row.iterations = fit.iterations;
  } catch (const std::exception& e) {
    row.note = sanitize_note(e.what());
  }
  row.seconds = timer.seconds();
  return row;
}

int run_bench(const BenchOpts& opts) {
  Report rep;
  echo_common(rep, "bench", opts.common);

  std::vector<int> n2_list =
      opts.n2_list.empty() ? opts.n1_list : opts.n2_list;
  if (n2_list.size() != opts.n1_list.size())
    throw polyads::InputError("--n1 and --n2 need the same number of values");
  if (opts.replications < 1)
    throw polyads::InputError("--replications must be positive");
  for (const std::string& est : opts.estimators)
    if (est != "polyads" && est != "ppml")
      throw polyads::InputError("unknown estimator '" + est + "'");
  polyads::NoiseKind noise;
  if (opts.noise_name == "poisson")
    noise = polyads::NoiseKind::poisson;
  else if (opts.noise_name == "negbin")
    noise = polyads::NoiseKind::negbin;
  else
    throw polyads::InputError("--noise must be poisson or negbin");

  rep.kv("config.n3", opts.n3);
  rep.kv("config.noise", opts.noise_name);
  if (noise == polyads::NoiseKind::negbin)
    rep.kv("config.negbin_rate", opts.negbin_rate);
  rep.kv("config.beta_star", opts.beta_star);
  rep.kv("config.replications", opts.replications);
  rep.kv("config.seed", opts.seed);
  rep.kv("config.truncation_L", opts.truncation);
  rep.kv("config.table_file", opts.out_table);
  rep.kv("config.long_file", opts.out_long);

  struct ConfigCell {
    int n1, n2;
    double density;
    polyads::ThreeWayDesign design;
  };
  std::vector<ConfigCell> grid;
  for (size_t s = 0; s < opts.n1_list.size(); ++s)
    for (double density : opts.densities) {
      ConfigCell cell;
      cell.n1 = opts.n1_list[s];
      cell.n2 = n2_list[s];
      cell.density = density;
      cell.design.n1 = cell.n1;
      cell.design.n2 = cell.n2;
      cell.design.n3 = opts.n3;
      cell.design.beta_star = opts.beta_star;
      cell.design.fe_std = opts.fe_std;
      cell.design.ar_coef = opts.ar_coef;
      cell.design.noise_scale = opts.noise_scale;
      cell.design.noise = noise;
      cell.design.negbin_rate = opts.negbin_rate;
      cell.design.seed = opts.seed;
      grid.push_back(cell);
    }

  const bool det = opts.common.deterministic;
  const size_t reps = static_cast<size_t>(opts.replications);
  const bool want_polyads =
      std::count(opts.estimators.begin(), opts.estimators.end(), "polyads") >
      0;
  const bool want_ppml =
      std::count(opts.estimators.begin(), opts.estimators.end(), "ppml") > 0;

  std::ofstream long_out(opts.out_long);
  if (!long_out) throw polyads::InputError("cannot write " + opts.out_long);
  long_out << "config,estimator,rep,converged,beta_hat,error,ci_lower,ci_"
              "upper,covered,iterations,seconds,note\n";
  std::ofstream table_out(opts.out_table);
  if (!table_out) throw polyads::InputError("cannot write " + opts.out_table);
  table_out << "config,n1,n2,n3,density,noise,estimator,replications,"
               "convergence_rate,mean_error,median_error,sd_beta,coverage,"
               "mean_seconds\n";

  auto field = [](double v) {
    return std::isnan(v) ? std::string("na") : format_double(v);
  };

  for (size_t g = 0; g < grid.size(); ++g) {
    ConfigCell& cell = grid[g];
    const std::string config_id = "c" + std::to_string(g + 1);
    PhaseTimer t_cal;
    cell.design.intercept_c =
        polyads::calibrate_intercept(cell.design, cell.density);
    rep.kv("result." + config_id + ".intercept_c", cell.design.intercept_c);
    rep.kv("timing." + config_id + ".calibration_s",
           time_field(config_id + ".calibration_s", t_cal.seconds(), det));

    std::vector<RepRow> polyads_rows(reps), ppml_rows(reps);
    polyads::parallel_blocks(
        reps, 1, opts.common.workers, [&](size_t begin, size_t end, size_t) {
          for (size_t r = begin; r < end; ++r) {
            polyads::SimulatedDataset ds =
                polyads::generate_three_way(cell.design, r);
            if (want_polyads)
              polyads_rows[r] =
                  run_polyads_rep(ds, opts.beta_star, opts.truncation);
            if (want_ppml) ppml_rows[r] = run_ppml_rep(ds, opts.beta_star);
          }
        });

    for (const std::string& est : {std::string("polyads"),
                                   std::string("ppml")}) {
      const bool is_polyads = est == "polyads";
      if (is_polyads && !want_polyads) continue;
      if (!is_polyads && !want_ppml) continue;
      const std::vector<RepRow>& rows = is_polyads ? polyads_rows : ppml_rows;

      size_t n_converged = 0;
      std::vector<double> errors, betas;
      size_t covered_n = 0, covered_den = 0;
      double total_seconds = 0.0;
      for (size_t r = 0; r < reps; ++r) {
        const RepRow& row = rows[r];
        total_seconds += row.seconds;
        if (row.converged) ++n_converged;
        // Iteration-capped estimates still enter the error summaries; the
        // convergence_rate column keeps the caveat visible.
        if (std::isfinite(row.beta)) {
          errors.push_back(row.error);
          betas.push_back(row.beta);
          if (row.covered >= 0) {
            ++covered_den;
            covered_n += row.covered;
          }
        }
        long_out << config_id << "," << est << "," << r << ","
                 << (row.converged ? "true" : "false") << ","
                 << field(row.beta) << "," << field(row.error) << ","
                 << field(row.ci_lo) << "," << field(row.ci_hi) << ","
                 << (row.covered < 0 ? "na" : std::to_string(row.covered))
                 << "," << row.iterations << ","
                 << (det ? "na" : format_double(row.seconds)) << ","
                 << row.note << "\n";
      }

      double mean_error = std::nan(""), sd_beta = std::nan("");
      if (!errors.empty()) {
        mean_error = 0.0;
        for (double e : errors) mean_error += e;
        mean_error /= static_cast<double>(errors.size());
      }
      if (betas.size() >= 2) {
        double mean_beta = 0.0;
        for (double b : betas) mean_beta += b;
        mean_beta /= static_cast<double>(betas.size());
        double ss = 0.0;
        for (double b : betas) ss += (b - mean_beta) * (b - mean_beta);
        sd_beta = std::sqrt(ss / static_cast<double>(betas.size() - 1));
      }
      std::string coverage =
          covered_den > 0
              ? format_double(static_cast<double>(covered_n) /
                              static_cast<double>(covered_den))
              : "na";
      table_out << config_id << "," << cell.n1 << "," << cell.n2 << ","
                << opts.n3 << "," << format_double(cell.density) << ","
                << opts.noise_name << "," << est << "," << reps << ","
                << format_double(static_cast<double>(n_converged) /
                                 static_cast<double>(reps))
                << "," << field(mean_error) << ","
                << field(median_of(errors)) << "," << field(sd_beta) << ","
                << coverage << ","
                << (det ? "na"
                        : format_double(total_seconds /
                                        static_cast<double>(reps)))
                << "\n";
    }
  }
  if (!long_out || !table_out)
    throw polyads::InputError("failed writing bench outputs");
  long_out.close();
  table_out.close();

  rep.write(opts.common.output);
  return 0;
}

// --------------------------------------------------------------- meta -----

struct MetaOpts {
  CommonOpts common;
  std::string input;
};

int run_meta(const MetaOpts& opts) {
  Report rep;
  echo_common(rep, "meta", opts.common);
  rep.kv("config.input", opts.input);

  std::ifstream in(opts.input);
  if (!in) throw polyads::InputError("cannot open " + opts.input);
  std::string line;
  if (!std::getline(in, line))
    throw polyads::InputError(opts.input + " is empty");
  auto header = polyads::split(line, ',');
  if (header.size() < 2)
    throw polyads::InputError(opts.input + ": header needs beta,var columns");

  std::vector<std::pair<double, double>> studies;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    auto parts = polyads::split(line, ',');
    if (parts.size() < 2)
      throw polyads::InputError(opts.input + ":" + std::to_string(lineno) +
                                ": expected beta,var");
    std::string ctx = opts.input + ":" + std::to_string(lineno);
    studies.emplace_back(polyads::parse_real(parts[0], ctx),
                         polyads::parse_real(parts[1], ctx));
  }
  if (studies.size() < 2)
    throw polyads::InputError("meta-analysis needs at least 2 rows");

  polyads::MetaResult result = polyads::meta_analysis(studies);
  rep.kv("result.n_studies", static_cast<uint64_t>(studies.size()));
  rep.kv("result.pooled", result.pooled);
  rep.kv("result.ci_lower", result.ci_lo);
  rep.kv("result.ci_upper", result.ci_hi);
  rep.kv("result.tau2", result.tau2);
  rep.kv("result.iterations", result.iterations);
  rep.kv("result.used_fallback", result.used_fallback);
  rep.write(opts.common.output);
  return 0;
}

// ---------------------------------------------------------------- main ----

// Applies --config file values as if they preceded the explicit flags.
std::vector<std::string> inject_config(const std::vector<std::string>& args,
                                       CLI::App& app) {
  size_t sub_pos = args.size();
  for (size_t k = 0; k < args.size(); ++k)
    if (!args[k].empty() && args[k][0] != '-') {
      sub_pos = k;
      break;
    }
  if (sub_pos == args.size()) return args;
  CLI::App* sub = app.get_subcommand_no_throw(args[sub_pos]);
  if (!sub) return args;

  std::string config_path;
  for (size_t k = sub_pos + 1; k < args.size(); ++k) {
    if (args[k] == "--config" && k + 1 < args.size())
      config_path = args[k + 1];
    else if (args[k].rfind("--config=", 0) == 0)
      config_path = args[k].substr(9);
  }
  if (config_path.empty()) return args;

  std::set<std::string> known;
  for (const CLI::Option* opt : sub->get_options())
    for (const std::string& name : opt->get_lnames()) known.insert(name);

  // Explicit flags silence the same key from the file, so repeat-averse
  // options (vectors, negated flags) see exactly one source.
  std::set<std::string> explicit_keys;
  for (size_t k = sub_pos + 1; k < args.size(); ++k) {
    const std::string& a = args[k];
    if (a.rfind("--", 0) != 0) continue;
    size_t eq = a.find('=');
    std::string name = a.substr(2, eq == std::string::npos ? eq : eq - 2);
    explicit_keys.insert(name);
    if (name.rfind("no-", 0) == 0) explicit_keys.insert(name.substr(3));
  }

  std::vector<std::string> out(args.begin(), args.begin() + sub_pos + 1);
  for (const auto& [key, value] : polyads::read_config_file(config_path)) {
    if (key == "config")
      throw polyads::InputError("config files cannot nest --config");
    if (!known.count(key))
      throw polyads::InputError("unknown config key '" + key + "' for " +
                                args[sub_pos]);
    if (explicit_keys.count(key)) continue;
    out.push_back("--" + key + "=" + value);
  }
  out.insert(out.end(), args.begin() + sub_pos + 1, args.end());
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"Sparse-graph estimation for multi-way count models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", polyads::kVersion);

  FitOpts fit_opts;
  CLI::App* fit_cmd =
      app.add_subcommand("fit", "Estimate beta from edge and covariate files");
  add_common(fit_cmd, &fit_opts.common);
  fit_cmd->add_option("--edges", fit_opts.edges, "Edge CSV: i1,...,iD,y")
      ->required();
  fit_cmd
      ->add_option("--covariates", fit_opts.covariates,
                   "Covariate CSV (i1,...,iD,x1,...,xp) or formula:<spec>")
      ->required();
  fit_cmd->add_option("--attributes", fit_opts.attributes,
                      "dim=path node-attribute CSV, repeatable");
  fit_cmd->add_option("--max-iterations", fit_opts.max_iterations);
  fit_cmd->add_option("--tolerance", fit_opts.tolerance);
  fit_cmd->add_option("--truncation", fit_opts.truncation);
  fit_cmd->add_option("--ridge", fit_opts.ridge);
  fit_cmd->add_flag("--damped,!--no-damped", fit_opts.damped);
  fit_cmd->add_option("--ci-quantile", fit_opts.ci_quantile);
  fit_cmd->add_option("--max-records", fit_opts.max_records);
  fit_cmd->add_option("--max-pair-touches", fit_opts.max_pair_touches);

  SimulateOpts sim_opts;
  CLI::App* sim_cmd =
      app.add_subcommand("simulate", "Generate a synthetic three-way dataset");
  add_common(sim_cmd, &sim_opts.common);
  sim_cmd->add_option("--n1", sim_opts.design.n1)->required();
  sim_cmd->add_option("--n2", sim_opts.design.n2)->required();
  sim_cmd->add_option("--n3", sim_opts.design.n3);
  sim_cmd->add_option("--beta", sim_opts.design.beta_star);
  sim_cmd->add_option("--fe-std", sim_opts.design.fe_std);
  sim_cmd->add_option("--ar", sim_opts.design.ar_coef);
  sim_cmd->add_option("--noise-scale", sim_opts.design.noise_scale);
  sim_cmd->add_option("--noise", sim_opts.noise_name, "poisson or negbin");
  sim_cmd->add_option("--negbin-rate", sim_opts.design.negbin_rate);
  sim_cmd->add_option("--seed", sim_opts.design.seed);
  sim_cmd->add_option("--rep", sim_opts.replication);
  sim_cmd->add_option("--density", sim_opts.density,
                      "Calibrate the intercept to this positive-cell share");
  sim_cmd->add_flag("--sparse-regime", sim_opts.sparse_regime,
                    "Calibrate so |E| is about 4*sqrt(n)");
  sim_cmd->add_option("--intercept", sim_opts.design.intercept_c,
                      "Fix the intercept instead of calibrating");
  sim_cmd->add_option("--out-edges", sim_opts.out_edges)->required();
  sim_cmd->add_option("--out-covariates", sim_opts.out_covariates)->required();

  BenchOpts bench_opts;
  CLI::App* bench_cmd = app.add_subcommand(
      "bench", "Monte Carlo comparison across a design grid");
  add_common(bench_cmd, &bench_opts.common);
  bench_cmd->add_option("--n1", bench_opts.n1_list)->delimiter(',');
  bench_cmd->add_option("--n2", bench_opts.n2_list)->delimiter(',');
  bench_cmd->add_option("--n3", bench_opts.n3);
  bench_cmd->add_option("--densities", bench_opts.densities)->delimiter(',');
  bench_cmd->add_option("--noise", bench_opts.noise_name);
  bench_cmd->add_option("--negbin-rate", bench_opts.negbin_rate);
  bench_cmd->add_option("--beta", bench_opts.beta_star);
  bench_cmd->add_option("--fe-std", bench_opts.fe_std);
  bench_cmd->add_option("--ar", bench_opts.ar_coef);
  bench_cmd->add_option("--noise-scale", bench_opts.noise_scale);
  bench_cmd->add_option("--replications", bench_opts.replications);
  bench_cmd->add_option("--estimators", bench_opts.estimators)
      ->delimiter(',');
  bench_cmd->add_option("--seed", bench_opts.seed);
  bench_cmd->add_option("--truncation", bench_opts.truncation);
  bench_cmd->add_option("--out-table", bench_opts.out_table)->required();
  bench_cmd->add_option("--out-long", bench_opts.out_long)->required();

  MetaOpts meta_opts;
  CLI::App* meta_cmd = app.add_subcommand(
      "meta", "Random-effects pooling of beta,var rows");
  add_common(meta_cmd, &meta_opts.common);
  meta_cmd->add_option("--input", meta_opts.input, "CSV with beta,var header")
      ->required();

  for (CLI::App* sub : {fit_cmd, sim_cmd, bench_cmd, meta_cmd})
    for (CLI::Option* opt : sub->get_options())
      if (opt->get_expected_min() > 0 && opt->get_items_expected_max() == 1)
        opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::vector<std::string> args(argv + 1, argv + argc);
  args = inject_config(args, app);
  sim_opts.intercept_given =
      std::any_of(args.begin(), args.end(), [](const std::string& a) {
        return a == "--intercept" || a.rfind("--intercept=", 0) == 0;
      });

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (fit_cmd->parsed()) return run_fit(fit_opts);
  if (sim_cmd->parsed()) return run_simulate(sim_opts);
  if (bench_cmd->parsed()) return run_bench(bench_opts);
  if (meta_cmd->parsed()) return run_meta(meta_opts);
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const polyads::ResourceGuardError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const polyads::NonConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const polyads::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
