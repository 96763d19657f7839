#include "rlearn/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "rlearn/csv.hpp"
#include "rlearn/kernel.hpp"

namespace rlearn {

namespace {

constexpr Index kMaxKernelN = 4000;  // dense factorization budget per fit

// Kernel R-learner at the given nuisance values: Robinson pseudo-outcomes and
// weights, median-heuristic bandwidth, prediction cap at cap_scale * max|y|,
// ridge chosen by CV. Mirrors the learner-facing kernel path but keeps the
// model visible for clamp accounting.
KernelModel fit_kernel(const Dataset& data, const VectorXd& m_hat,
                       const VectorXd& e_hat, const LearnerOptions& options,
                       Rng rng) {
  NuisanceEstimates nuisance;
  nuisance.m_hat = m_hat;
  nuisance.e_hat = e_hat;
  const RobinsonParts parts = robinson_residualize(data, nuisance);
  const double bandwidth = options.kernel_bandwidth > 0.0
                               ? options.kernel_bandwidth
                               : median_pairwise_bandwidth(data.x);
  const double cap =
      options.kernel_cap_scale > 0.0
          ? options.kernel_cap_scale * data.y.cwiseAbs().maxCoeff()
          : 0.0;
  KernelCvResult cv = kernel_rlearner_cv(
      data.x, parts.pseudo_outcome, parts.weight, options.kernel_ridge_grid,
      options.kernel_cv_folds, bandwidth, cap, rng);
  return std::move(cv.model);
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t half = values.size() / 2;
  if (values.size() % 2 == 1) return values[half];
  return 0.5 * (values[half - 1] + values[half]);
}

}  // namespace

double log_log_slope(const std::vector<Index>& n, const VectorXd& y) {
  const Index k = y.size();
  if (static_cast<Index>(n.size()) != k || k < 2)
    throw std::invalid_argument("log_log_slope: need two or more points");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (Index i = 0; i < k; ++i) {
    if (n[i] <= 0)
      throw std::invalid_argument("log_log_slope: sample sizes must be positive");
    const double lx = std::log(static_cast<double>(n[i]));
    const double ly = std::log(std::max(y[i], 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double kk = static_cast<double>(k);
  const double denom = kk * sxx - sx * sx;
  if (denom <= 0.0)
    throw std::invalid_argument("log_log_slope: sample sizes must differ");
  return (kk * sxy - sx * sy) / denom;
}

RateResult run_rate_experiment(const RateConfig& config) {
  const std::vector<Index>& grid = config.n_grid;
  if (grid.size() < 3)
    throw std::invalid_argument("run_rate_experiment: n_grid needs length >= 3");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 1)
      throw std::invalid_argument("run_rate_experiment: sample sizes must be positive");
    if (grid[i] > kMaxKernelN)
      throw std::invalid_argument("run_rate_experiment: kernel fits are capped at n = 4000");
    if (i > 0 && grid[i] <= grid[i - 1])
      throw std::invalid_argument("run_rate_experiment: n_grid must be strictly increasing");
  }
  if (config.reps < 10)
    throw std::invalid_argument("run_rate_experiment: reps must be >= 10");
  if (config.test_n < 1)
    throw std::invalid_argument("run_rate_experiment: test_n must be positive");
  if (config.nuisance_family == Family::kernel)
    throw std::invalid_argument(
        "run_rate_experiment: nuisance family must be lasso or boost");

  NuisanceSpec spec_m;
  spec_m.family = config.nuisance_family;
  const NuisanceSpec spec_e = spec_m;

  const Rng root(config.seed);
  RateResult out;
  out.n_grid = grid;
  out.oracle_regret.resize(static_cast<Index>(grid.size()));
  out.feasible_regret.resize(static_cast<Index>(grid.size()));

  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    std::vector<double> oracle_runs, feasible_runs;
    oracle_runs.reserve(config.reps);
    feasible_runs.reserve(config.reps);
    for (int rep = 0; rep < config.reps; ++rep) {
      // Every stream below chains from (seed, gi, rep), so replications are
      // reproducible independently of execution order.
      const Rng cell = root.derive(Stream::train, gi, rep);

      SetupSpec train_spec = config.setup;
      train_spec.n = grid[gi];
      const Dataset train =
          generate_setup(train_spec, cell.derive(Stream::train));

      SetupSpec test_spec = config.setup;
      test_spec.n = config.test_n;
      const Dataset test = generate_setup(test_spec, cell.derive(Stream::test));

      const KernelModel oracle =
          fit_kernel(train, train.truth->m_star, train.truth->e_star,
                     config.options, cell.derive(Stream::search, 0));
      const double oracle_regret =
          empirical_regret(oracle.predict(test.x),  *test.truth);

      const FoldPlan plan = assign_folds(train.n(), config.nuisance_folds,
                                         cell.derive(Stream::folds));
      const NuisanceEstimates nuisance = fit_nuisances(
          train, plan, spec_m, spec_e, cell.derive(Stream::outcome));
      const KernelModel feasible =
          fit_kernel(train, nuisance.m_hat, nuisance.e_hat, config.options,
                     cell.derive(Stream::search, 1));
      const double feasible_regret =
          empirical_regret(feasible.predict(test.x),  *test.truth);

      out.clamp_activations +=
          oracle.clamp_activations + feasible.clamp_activations;
      oracle_runs.push_back(oracle_regret);
      feasible_runs.push_back(feasible_regret);
      out.records.push_back(
          {grid[gi], rep, "oracle", oracle_regret});
      out.records.push_back(
          {grid[gi], rep, "feasible", feasible_regret});
      if (config.on_record) {
        config.on_record(out.records[out.records.size() - 2]);
        config.on_record(out.records.back());
      }
    }
    out.oracle_regret[static_cast<Index>(gi)] = median(std::move(oracle_runs));
    out.feasible_regret[static_cast<Index>(gi)] =
        median(std::move(feasible_runs));
  }

  out.slope_oracle = log_log_slope(grid, out.oracle_regret);
  out.slope_feasible = log_log_slope(grid, out.feasible_regret);
  out.ratio_max = 0.0;
  for (Index i = 0; i < out.oracle_regret.size(); ++i) {
    double ratio;
    if (out.oracle_regret[i] > 0.0) {
      ratio = out.feasible_regret[i] / out.oracle_regret[i];
    } else {
      ratio = out.feasible_regret[i] == 0.0
                  ? 1.0
                  : std::numeric_limits<double>::infinity();
    }
    out.ratio_max = std::max(out.ratio_max, ratio);
  }
  return out;
}

ProbeResult nuisance_rate_probe(const ProbeConfig& config) {
  if (config.kappa < 0.0)
    throw std::invalid_argument("nuisance_rate_probe: kappa must be >= 0");
  if (config.scale < 0.0)
    throw std::invalid_argument("nuisance_rate_probe: scale must be >= 0");
  if (config.setup.n > kMaxKernelN)
    throw std::invalid_argument("nuisance_rate_probe: kernel fits are capped at n = 4000");
  if (config.test_n < 1)
    throw std::invalid_argument("nuisance_rate_probe: test_n must be positive");

  const Rng root(config.seed);
  const Dataset train = generate_setup(config.setup, root.derive(Stream::train));
  SetupSpec test_spec = config.setup;
  test_spec.n = config.test_n;
  const Dataset test = generate_setup(test_spec, root.derive(Stream::test));

  // Both fits share data and rng stream; only the nuisance values differ, so
  // scale = 0 reproduces the oracle fit exactly (the clip is inactive
  // wherever e* is already interior).
  const Rng fit_rng = root.derive(Stream::search, 0);

  const KernelModel oracle = fit_kernel(train, train.truth->m_star,
                                        train.truth->e_star, config.options,
                                        fit_rng);

  const double decay =
      config.scale *
      std::pow(static_cast<double>(train.n()), -config.kappa);
  VectorXd bump(train.n());
  for (Index i = 0; i < train.n(); ++i)
    bump[i] = decay * std::sin(2.0 * 3.14159265358979323846 * train.x(i, 0));
  const VectorXd m_corrupted = train.truth->m_star + bump;
  VectorXd e_corrupted = train.truth->e_star + bump;
  for (Index i = 0; i < e_corrupted.size(); ++i)
    e_corrupted[i] = trim(e_corrupted[i], 0.01);

  const KernelModel corrupted =
      fit_kernel(train, m_corrupted, e_corrupted, config.options, fit_rng);

  ProbeResult out;
  out.oracle_regret = empirical_regret(oracle.predict(test.x),  *test.truth);
  out.corrupted_regret = empirical_regret(corrupted.predict(test.x),  *test.truth);
  return out;
}

void write_rate_records_csv(const std::string& path, const RateResult& result) {
  CsvWriter writer(path, {"n", "rep", "learner", "regret"});
  for (const RateRecord& record : result.records) {
    writer.write_row({std::to_string(record.n), std::to_string(record.rep),
                      record.learner, format_double(record.regret)});
  }
}

void write_rate_summary_csv(const std::string& path, const RateResult& result) {
  CsvWriter writer(path, {"slope_oracle", "slope_feasible", "ratio_max"});
  writer.write_row({format_double(result.slope_oracle),
                    format_double(result.slope_feasible),
                    format_double(result.ratio_max)});
}

}  // namespace rlearn
