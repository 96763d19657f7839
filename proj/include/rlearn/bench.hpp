#pragma once

// Replicated benchmark driver: runs the requested meta-learners over a grid
// of simulation cells, streams per-replication records to CSV, aggregates
// mean-MSE tables, and checks them against reference values.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "rlearn/crossfit.hpp"
#include "rlearn/learners.hpp"
#include "rlearn/simulate.hpp"

namespace rlearn {

struct BenchConfig {
  std::vector<Setup> setups{Setup::A};
  std::vector<Index> n_values{500};
  std::vector<Index> d_values{6};
  std::vector<double> sigma_values{0.5};
  std::vector<LearnerKind> learners{
      LearnerKind::S, LearnerKind::T,  LearnerKind::X,     LearnerKind::U,
      LearnerKind::R, LearnerKind::RS, LearnerKind::oracle};
  Family family = Family::lasso;
  int reps = 0;          // <= 0: family default (lasso 100, boost 50, kernel 20)
  int folds = 10;        // cross-fitting folds for the shared nuisances
  std::uint64_t seed = 0;
  std::string out_path;  // incremental records CSV; empty disables
  int jobs = 1;          // worker threads; output order is jobs-independent
  LearnerOptions options;  // forwarded to every learner fit
};

struct ExperimentRecord {
  Setup setup = Setup::A;
  Index n = 0;
  Index d = 0;
  double sigma = 0.0;
  LearnerKind learner = LearnerKind::R;
  Family family = Family::lasso;
  int rep = 0;
  double test_mse = 0.0;   // NaN when the fit failed
  double cv_r_loss = 0.0;  // R-loss on train under the shared out-of-fold
                           // nuisances; NaN when none were fitted
  double wall_time_seconds = 0.0;
  std::uint64_t nuisance_checksum = 0;  // FNV-1a over shared m-hat then
                                        // e-hat bytes; 0 without nuisances
  std::string error;  // empty on success
};

int resolve_reps(const BenchConfig& config);

// Work units are (cell, replication) pairs; within one replication R, RS, X
// and U consume the same cross-fitted NuisanceEstimates. Every stream of
// replication r in cell c derives from (seed, c, r) and per-learner streams
// are tagged by learner kind, so records are reproducible bit-for-bit no
// matter the scheduling, the jobs value, or which other learners run.
// Records go to config.out_path (header + one flushed line each, so a
// crashed run leaves a parseable prefix) and to sink when given, in
// (cell, rep, learner) order. Individual fit failures are recorded in
// record.error with test_mse = NaN and do not abort the run; an unwritable
// out_path throws before any fitting starts.
std::vector<ExperimentRecord> run_benchmark(
    const BenchConfig& config,
    const std::function<void(const ExperimentRecord&)>& sink = {});

struct AggregateRow {
  Setup setup = Setup::A;
  Index n = 0;
  Index d = 0;
  double sigma = 0.0;
  LearnerKind learner = LearnerKind::R;
  Family family = Family::lasso;
  double mean_mse = 0.0;
  double se_mse = 0.0;  // standard error of the mean
  int reps = 0;         // successful replications only
};

// Groups records by cell; failed records are excluded from the statistics.
// Rows come back ordered by (setup, n, d, sigma, learner).
std::vector<AggregateRow> aggregate(const std::vector<ExperimentRecord>& records);

// Half-away-from-zero rounding (used by the printed table; CSV keeps raw
// means).
double round_half_away(double value, int digits);

std::vector<std::string> record_csv_header();
std::vector<std::string> record_csv_row(const ExperimentRecord& record);
std::vector<ExperimentRecord> read_records_csv(const std::string& path);

void write_aggregate_csv(const std::string& path,
                         const std::vector<AggregateRow>& rows);
void print_aggregate_table(std::ostream& os,
                           const std::vector<AggregateRow>& rows);

struct ReferenceEntry {
  Family family = Family::lasso;
  Setup setup = Setup::A;
  Index n = 0;
  Index d = 0;
  double sigma = 0.0;
  LearnerKind learner = LearnerKind::R;
  double mse = 0.0;
};

// columns: family, setup, n, d, sigma, learner, mse
std::vector<ReferenceEntry> read_reference_csv(const std::string& path);

struct ComparisonRow {
  AggregateRow cell;
  double reference = 0.0;
  double tolerance = 0.0;  // max(abs_tol, rel_tol * reference)
  bool pass = false;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;  // aggregate cells with a reference value
  int failures = 0;
  int unmatched = 0;  // aggregate cells lacking a reference row
};

// Cell passes iff |mean - reference| <= max(abs_tol, rel_tol * reference);
// a zero reference therefore falls back to the absolute tolerance.
ComparisonReport compare_to_reference(const std::vector<AggregateRow>& table,
                                      const std::vector<ReferenceEntry>& reference,
                                      double abs_tol, double rel_tol);
void print_comparison_report(std::ostream& os, const ComparisonReport& report);

}  // namespace rlearn
