#pragma once

// Regret-rate harness for the kernel residual-on-residual learner: compares
// the oracle fit (true m*, e* plugged in) against the feasible fit
// (cross-fitted nuisances) across a grid of sample sizes, and probes how
// fast nuisance errors must decay for the two to stay coupled.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rlearn/crossfit.hpp"
#include "rlearn/learners.hpp"
#include "rlearn/simulate.hpp"

namespace rlearn {

// One (n, replication, learner) regret measurement.
struct RateRecord {
  Index n = 0;
  int rep = 0;
  std::string learner;  // oracle | feasible | corrupted
  double regret = 0.0;
};

struct RateResult {
  std::vector<Index> n_grid;        // strictly increasing, length >= 3
  VectorXd oracle_regret;           // median regret per n
  VectorXd feasible_regret;         // same for the cross-fitted learner
  double slope_oracle = 0.0;        // least-squares slope, log regret vs log n
  double slope_feasible = 0.0;
  double ratio_max = 0.0;           // max over n of feasible / oracle median
  long long clamp_activations = 0;  // prediction-cap hits across all fits
  std::vector<RateRecord> records;  // every underlying measurement
};

struct RateConfig {
  SetupSpec setup;  // template; n is taken from n_grid
  std::vector<Index> n_grid = {500, 1000, 2000, 4000};
  int reps = 20;
  Family nuisance_family = Family::lasso;  // lasso | boost
  int nuisance_folds = 5;
  LearnerOptions options;  // kernel ridge-CV controls
  Index test_n = 10000;    // independent evaluation points per replication
  std::uint64_t seed = 0;
  std::function<void(const RateRecord&)> on_record;  // progress hook
};

// For each n and replication: draw a training set, fit the oracle and the
// feasible kernel learner, and score both by empirical_regret on a fresh
// test set. Aggregates medians per n and fits log-log slopes. Requires
// n_grid length >= 3 strictly increasing, reps >= 10; each fit is capped at
// n = 4000 (dense factorization).
RateResult run_rate_experiment(const RateConfig& config);

struct ProbeConfig {
  SetupSpec setup;     // full spec; setup.n is the training size
  double kappa = 0.5;  // nuisance error decay exponent
  double scale = 1.0;  // corruption amplitude c; c = 0 recovers the oracle
  LearnerOptions options;
  Index test_n = 10000;
  std::uint64_t seed = 0;
};

struct ProbeResult {
  double corrupted_regret = 0.0;
  double oracle_regret = 0.0;
};

// Same data, two fits: one with the true nuisances and one with
// m* + c n^-kappa g(x) and e* shifted likewise then clipped to [0.01, 0.99],
// where g(x) = sin(2 pi x_0). Errors decaying faster than n^-1/4 leave the
// corrupted regret near the oracle; slower decay breaks the coupling. With
// c = 0 the two fits coincide wherever e* already sits inside the clip range.
ProbeResult nuisance_rate_probe(const ProbeConfig& config);

// Least-squares slope of log(y) on log(n). Zero regrets are floored at
// 1e-300 to keep the logs finite.
double log_log_slope(const std::vector<Index>& n, const VectorXd& y);

// records CSV: columns n, rep, learner, regret (one row per measurement).
// summary CSV: one row of slope_oracle, slope_feasible, ratio_max.
void write_rate_records_csv(const std::string& path, const RateResult& result);
void write_rate_summary_csv(const std::string& path, const RateResult& result);

}  // namespace rlearn
