#include "rlearn/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <tuple>

#include "rlearn/csv.hpp"
#include "rlearn/threadpool.hpp"

namespace rlearn {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct Cell {
  Setup setup = Setup::A;
  Index n = 0;
  Index d = 0;
  double sigma = 0.0;
  std::size_t id = 0;
};

std::vector<Cell> enumerate_cells(const BenchConfig& config) {
  std::vector<Cell> cells;
  for (Setup setup : config.setups)
    for (Index n : config.n_values)
      for (Index d : config.d_values)
        for (double sigma : config.sigma_values)
          cells.push_back({setup, n, d, sigma, cells.size()});
  return cells;
}

bool consumes_nuisance(LearnerKind kind) {
  return kind == LearnerKind::R || kind == LearnerKind::RS ||
         kind == LearnerKind::X || kind == LearnerKind::U;
}

std::uint64_t fnv1a_bytes(const void* data, std::size_t len, std::uint64_t hash) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    hash ^= bytes[i];
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::uint64_t nuisance_checksum(const NuisanceEstimates& nuisance) {
  std::uint64_t hash = 14695981039346656037ULL;
  hash = fnv1a_bytes(nuisance.m_hat.data(),
                     static_cast<std::size_t>(nuisance.m_hat.size()) * sizeof(double), hash);
  hash = fnv1a_bytes(nuisance.e_hat.data(),
                     static_cast<std::size_t>(nuisance.e_hat.size()) * sizeof(double), hash);
  return hash;
}

// Keep record rows single-cell safe: our CSV layer does no quoting.
std::string sanitize_cell(std::string text) {
  for (char& c : text)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return text;
}

// One (cell, replication) work unit: shared data, shared nuisances, one
// record per requested learner. Failures stay inside the failing record.
std::vector<ExperimentRecord> run_unit(const BenchConfig& config,
                                       const Cell& cell, int rep) {
  const Rng cell_rng = Rng(config.seed).derive(Stream::train, cell.id,
                                               static_cast<std::uint64_t>(rep));
  SetupSpec spec;
  spec.setup = cell.setup;
  spec.n = cell.n;
  spec.d = cell.d;
  spec.sigma = cell.sigma;
  const Dataset train = generate_setup(spec, cell_rng.derive(Stream::train));
  const Dataset test = generate_setup(spec, cell_rng.derive(Stream::test));

  const bool nuisance_needed =
      std::any_of(config.learners.begin(), config.learners.end(), consumes_nuisance);
  NuisanceEstimates nuisance;
  bool have_nuisance = false;
  std::uint64_t checksum = 0;
  std::string nuisance_error;
  if (nuisance_needed) {
    try {
      const FoldPlan plan =
          assign_folds(train.n(), config.folds, cell_rng.derive(Stream::folds));
      NuisanceSpec spec_m;
      spec_m.family = config.family;
      nuisance = fit_nuisances(train, plan, spec_m, spec_m,
                               cell_rng.derive(Stream::outcome));
      have_nuisance = true;
      checksum = nuisance_checksum(nuisance);
    } catch (const std::exception& fail) {
      nuisance_error = fail.what();
    }
  }

  std::vector<ExperimentRecord> records;
  records.reserve(config.learners.size());
  for (LearnerKind kind : config.learners) {
    ExperimentRecord record;
    record.setup = cell.setup;
    record.n = cell.n;
    record.d = cell.d;
    record.sigma = cell.sigma;
    record.learner = kind;
    record.family = config.family;
    record.rep = rep;
    record.test_mse = kNan;
    record.cv_r_loss = kNan;

    const bool consumes = consumes_nuisance(kind);
    if (consumes && !have_nuisance) {
      record.error = sanitize_cell(nuisance_error.empty()
                                       ? "nuisance estimates unavailable"
                                       : nuisance_error);
      records.push_back(std::move(record));
      continue;
    }

    const auto started = std::chrono::steady_clock::now();
    try {
      // Streams are tagged by learner kind (not list position) so a record
      // does not depend on which other learners were requested.
      const CateModelPtr model =
          fit_learner(kind, train, consumes ? &nuisance : nullptr,
                      config.family, config.options,
                      cell_rng.derive(Stream::search,
                                      static_cast<std::uint64_t>(kind)));
      record.test_mse = mse(model->predict(test.x), test.truth->tau_star);
      if (have_nuisance) {
        record.cv_r_loss = r_loss(model->predict(train.x), train, nuisance);
        record.nuisance_checksum = consumes ? checksum : 0;
      }
    } catch (const std::exception& fail) {
      record.test_mse = kNan;
      record.cv_r_loss = kNan;
      record.error = sanitize_cell(fail.what());
    }
    record.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
            .count();
    records.push_back(std::move(record));
  }
  return records;
}

// Display order mirrors the benchmark tables.
int learner_rank(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::S: return 0;
    case LearnerKind::T: return 1;
    case LearnerKind::X: return 2;
    case LearnerKind::U: return 3;
    case LearnerKind::R: return 4;
    case LearnerKind::RS: return 5;
    case LearnerKind::oracle: return 6;
  }
  return 7;
}

}  // namespace

int resolve_reps(const BenchConfig& config) {
  if (config.reps > 0) return config.reps;
  switch (config.family) {
    case Family::lasso: return 100;
    case Family::boost: return 50;
    case Family::kernel: return 20;
  }
  return 100;
}

std::vector<ExperimentRecord> run_benchmark(
    const BenchConfig& config,
    const std::function<void(const ExperimentRecord&)>& sink) {
  if (config.setups.empty() || config.n_values.empty() ||
      config.d_values.empty() || config.sigma_values.empty() ||
      config.learners.empty())
    throw std::invalid_argument("run_benchmark: empty grid list");
  for (Index n : config.n_values)
    if (n < 1) throw std::invalid_argument("run_benchmark: n must be positive");
  for (Index d : config.d_values)
    if (d < 5) throw std::invalid_argument("run_benchmark: d must be >= 5");
  for (double sigma : config.sigma_values)
    if (sigma < 0.0)
      throw std::invalid_argument("run_benchmark: sigma must be >= 0");
  if (config.folds < 2)
    throw std::invalid_argument("run_benchmark: folds must be >= 2");
  const int reps = resolve_reps(config);
  if (reps < 1) throw std::invalid_argument("run_benchmark: reps must be >= 1");

  // Open the output before any fitting so a bad path fails immediately.
  std::optional<CsvWriter> writer;
  if (!config.out_path.empty())
    writer.emplace(config.out_path, record_csv_header());

  const std::vector<Cell> cells = enumerate_cells(config);
  const std::size_t total = cells.size() * static_cast<std::size_t>(reps);
  std::vector<ExperimentRecord> all;
  all.reserve(total * config.learners.size());

  parallel_for_ordered<std::vector<ExperimentRecord>>(
      total, config.jobs,
      [&](std::size_t unit) {
        const Cell& cell = cells[unit / static_cast<std::size_t>(reps)];
        const int rep = static_cast<int>(unit % static_cast<std::size_t>(reps));
        return run_unit(config, cell, rep);
      },
      [&](std::size_t, std::vector<ExperimentRecord>&& records) {
        for (ExperimentRecord& record : records) {
          if (writer) writer->write_row(record_csv_row(record));
          if (sink) sink(record);
          all.push_back(std::move(record));
        }
      });
  return all;
}

std::vector<AggregateRow> aggregate(const std::vector<ExperimentRecord>& records) {
  using Key = std::tuple<int, Index, Index, double, int, int>;
  std::map<Key, std::vector<double>> groups;
  std::map<Key, AggregateRow> meta;
  for (const ExperimentRecord& record : records) {
    if (!record.error.empty() || std::isnan(record.test_mse)) continue;
    const Key key{static_cast<int>(record.setup), record.n, record.d,
                  record.sigma, learner_rank(record.learner),
                  static_cast<int>(record.family)};
    groups[key].push_back(record.test_mse);
    AggregateRow& row = meta[key];
    row.setup = record.setup;
    row.n = record.n;
    row.d = record.d;
    row.sigma = record.sigma;
    row.learner = record.learner;
    row.family = record.family;
  }
  std::vector<AggregateRow> rows;
  rows.reserve(groups.size());
  for (auto& [key, values] : groups) {
    AggregateRow row = meta[key];
    const double count = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= count;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    row.mean_mse = mean;
    row.se_mse = values.size() > 1 ? std::sqrt(ss / (count - 1.0) / count) : 0.0;
    row.reps = static_cast<int>(values.size());
    rows.push_back(row);
  }
  return rows;
}

double round_half_away(double value, int digits) {
  const double scale = std::pow(10.0, digits);
  return std::round(value * scale) / scale;
}

std::vector<std::string> record_csv_header() {
  return {"setup",     "n",         "d",
          "sigma",     "learner",   "family",
          "rep",       "test_mse",  "cv_r_loss",
          "wall_time_seconds",      "nuisance_checksum",
          "error"};
}

std::vector<std::string> record_csv_row(const ExperimentRecord& record) {
  return {setup_name(record.setup),
          std::to_string(record.n),
          std::to_string(record.d),
          format_double(record.sigma),
          learner_label(record.learner),
          family_name(record.family),
          std::to_string(record.rep),
          format_double(record.test_mse),
          format_double(record.cv_r_loss),
          format_double(record.wall_time_seconds),
          std::to_string(record.nuisance_checksum),
          sanitize_cell(record.error)};
}

std::vector<ExperimentRecord> read_records_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const Index setup_col = table.column("setup");
  const Index n_col = table.column("n");
  const Index d_col = table.column("d");
  const Index sigma_col = table.column("sigma");
  const Index learner_col = table.column("learner");
  const Index family_col = table.column("family");
  const Index rep_col = table.column("rep");
  const Index mse_col = table.column("test_mse");
  const Index rloss_col = table.column("cv_r_loss");
  const Index wall_col = table.column("wall_time_seconds");
  const Index checksum_col = table.column("nuisance_checksum");
  const Index error_col = table.column("error");
  std::vector<ExperimentRecord> records;
  records.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    ExperimentRecord record;
    record.setup = setup_from_name(row[setup_col]);
    record.n = static_cast<Index>(std::stoll(row[n_col]));
    record.d = static_cast<Index>(std::stoll(row[d_col]));
    record.sigma = std::stod(row[sigma_col]);
    record.learner = learner_from_label(row[learner_col]);
    record.family = family_from_name(row[family_col]);
    record.rep = static_cast<int>(std::stol(row[rep_col]));
    record.test_mse = std::stod(row[mse_col]);
    record.cv_r_loss = std::stod(row[rloss_col]);
    record.wall_time_seconds = std::stod(row[wall_col]);
    record.nuisance_checksum = std::stoull(row[checksum_col]);
    record.error = row[error_col];
    records.push_back(std::move(record));
  }
  return records;
}

void write_aggregate_csv(const std::string& path,
                         const std::vector<AggregateRow>& rows) {
  CsvWriter writer(path, {"setup", "n", "d", "sigma", "learner", "family",
                          "mean_mse", "se_mse", "reps"});
  for (const AggregateRow& row : rows) {
    writer.write_row({setup_name(row.setup), std::to_string(row.n),
                      std::to_string(row.d), format_double(row.sigma),
                      learner_label(row.learner), family_name(row.family),
                      format_double(row.mean_mse), format_double(row.se_mse),
                      std::to_string(row.reps)});
  }
}

void print_aggregate_table(std::ostream& os,
                           const std::vector<AggregateRow>& rows) {
  os << std::left << std::setw(7) << "setup" << std::right << std::setw(7)
     << "n" << std::setw(5) << "d" << std::setw(8) << "sigma" << "  "
     << std::left << std::setw(8) << "learner" << std::right << std::setw(8)
     << "mse" << std::setw(10) << "se" << std::setw(7) << "reps" << "\n";
  const std::streamsize old_precision = os.precision();
  for (const AggregateRow& row : rows) {
    os << std::left << std::setw(7) << setup_name(row.setup) << std::right
       << std::setw(7) << row.n << std::setw(5) << row.d << std::setw(8)
       << std::fixed << std::setprecision(2) << row.sigma << "  " << std::left
       << std::setw(8) << learner_label(row.learner) << std::right
       << std::setw(8) << std::setprecision(2)
       << round_half_away(row.mean_mse, 2) << std::setw(10)
       << std::setprecision(3) << row.se_mse << std::setw(7) << row.reps
       << "\n";
  }
  os.unsetf(std::ios_base::fixed);
  os.precision(old_precision);
}

std::vector<ReferenceEntry> read_reference_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const Index family_col = table.column("family");
  const Index setup_col = table.column("setup");
  const Index n_col = table.column("n");
  const Index d_col = table.column("d");
  const Index sigma_col = table.column("sigma");
  const Index learner_col = table.column("learner");
  const Index mse_col = table.column("mse");
  std::vector<ReferenceEntry> entries;
  entries.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    ReferenceEntry entry;
    entry.family = family_from_name(row[family_col]);
    entry.setup = setup_from_name(row[setup_col]);
    entry.n = static_cast<Index>(std::stoll(row[n_col]));
    entry.d = static_cast<Index>(std::stoll(row[d_col]));
    entry.sigma = std::stod(row[sigma_col]);
    entry.learner = learner_from_label(row[learner_col]);
    entry.mse = std::stod(row[mse_col]);
    entries.push_back(entry);
  }
  return entries;
}

ComparisonReport compare_to_reference(const std::vector<AggregateRow>& table,
                                      const std::vector<ReferenceEntry>& reference,
                                      double abs_tol, double rel_tol) {
  if (abs_tol < 0.0 || rel_tol < 0.0)
    throw std::invalid_argument("compare_to_reference: tolerances must be >= 0");
  ComparisonReport report;
  for (const AggregateRow& row : table) {
    const ReferenceEntry* match = nullptr;
    for (const ReferenceEntry& entry : reference) {
      if (entry.family == row.family && entry.setup == row.setup &&
          entry.n == row.n && entry.d == row.d &&
          std::abs(entry.sigma - row.sigma) < 1e-12 &&
          entry.learner == row.learner) {
        match = &entry;
        break;
      }
    }
    if (match == nullptr) {
      ++report.unmatched;
      continue;
    }
    ComparisonRow out;
    out.cell = row;
    out.reference = match->mse;
    out.tolerance = std::max(abs_tol, rel_tol * match->mse);
    out.pass = std::abs(row.mean_mse - match->mse) <= out.tolerance;
    if (!out.pass) ++report.failures;
    report.rows.push_back(out);
  }
  return report;
}

void print_comparison_report(std::ostream& os, const ComparisonReport& report) {
  for (const ComparisonRow& row : report.rows) {
    os << (row.pass ? "pass" : "FAIL") << "  " << family_name(row.cell.family)
       << " " << setup_name(row.cell.setup) << " n=" << row.cell.n
       << " d=" << row.cell.d << " sigma=" << format_double(row.cell.sigma)
       << " " << learner_label(row.cell.learner) << ": mean "
       << format_double(row.cell.mean_mse) << " vs reference "
       << format_double(row.reference) << " (tolerance "
       << format_double(row.tolerance) << ")\n";
  }
  os << report.rows.size() - static_cast<std::size_t>(report.failures) << "/"
     << report.rows.size() << " cells within tolerance";
  if (report.unmatched > 0)
    os << " (" << report.unmatched << " cells had no reference value)";
  os << "\n";
}

}  // namespace rlearn
