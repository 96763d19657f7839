// Command-line driver: replicated benchmark grids, dataset generation,
// label-flip spiking, kernel regret-rate experiments, and reference-table
// checks. Exit codes: 0 ok, 2 tolerance failure, 1 error.

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rlearn/bench.hpp"
#include "rlearn/csv.hpp"
#include "rlearn/rates.hpp"

namespace {

using namespace rlearn;

std::vector<Setup> parse_setups(const std::vector<std::string>& names) {
  std::vector<Setup> out;
  out.reserve(names.size());
  for (const std::string& name : names) out.push_back(setup_from_name(name));
  return out;
}

std::vector<LearnerKind> parse_learners(const std::vector<std::string>& labels) {
  std::vector<LearnerKind> out;
  out.reserve(labels.size());
  for (const std::string& label : labels)
    out.push_back(learner_from_label(label));
  return out;
}

// records.csv -> records_<suffix>.csv
std::string derived_path(const std::string& path, const std::string& suffix) {
  const std::size_t dot = path.find_last_of('.');
  const std::size_t slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path + "_" + suffix + ".csv";
  return path.substr(0, dot) + "_" + suffix + path.substr(dot);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Treatment-effect meta-learner benchmarks"};
  app.require_subcommand(1);

  // ---- bench ----------------------------------------------------------------
  auto* bench = app.add_subcommand(
      "bench", "Run a replicated benchmark grid and aggregate mean MSE");
  std::vector<std::string> setup_names{"A"};
  std::vector<Index> n_values{500};
  std::vector<Index> d_values{6};
  std::vector<double> sigma_values{0.5};
  std::vector<std::string> learner_labels{"s", "t", "x", "u", "r", "rs", "oracle"};
  std::string bench_family = "lasso";
  int bench_reps = 0;
  int bench_folds = 10;
  std::uint64_t bench_seed = 0;
  std::string bench_out = "records.csv";
  std::string bench_aggregate_out;
  int bench_jobs = 1;
  bool bench_quiet = false;
  bench->add_option("--setup", setup_names, "Setups to run (A,B,C,D)")
      ->delimiter(',');
  bench->add_option("--n", n_values, "Training sizes")->delimiter(',');
  bench->add_option("--d", d_values, "Covariate dimensions")->delimiter(',');
  bench->add_option("--sigma", sigma_values, "Noise levels")->delimiter(',');
  bench
      ->add_option("--learners", learner_labels,
                   "Learners to fit (s,t,x,u,r,rs,oracle)")
      ->delimiter(',');
  bench->add_option("--family", bench_family, "Base-learner family: lasso or boost");
  bench->add_option("--reps", bench_reps,
                    "Replications per cell (0 = family default: lasso 100, boost 50)");
  bench->add_option("--folds", bench_folds, "Cross-fitting folds for nuisances");
  bench->add_option("--seed", bench_seed, "Root seed");
  bench->add_option("--out", bench_out, "Per-record CSV path");
  bench->add_option("--aggregate-out", bench_aggregate_out,
                    "Aggregate CSV path (default: derived from --out)");
  bench->add_option("--jobs", bench_jobs, "Worker threads (records stay ordered)");
  bench->add_flag("--quiet", bench_quiet, "Suppress per-replication progress");
  bench->set_config("--config", "",
                    "Flat key = value file mirroring these flags; flags override");

  // ---- generate ---------------------------------------------------------------
  auto* generate =
      app.add_subcommand("generate", "Write a simulated dataset to CSV");
  std::string gen_setup = "A";
  Index gen_n = 500, gen_d = 6;
  double gen_sigma = 0.5;
  std::uint64_t gen_seed = 0;
  std::string gen_out = "dataset.csv";
  std::string gen_stack_tau;
  generate->add_option("--setup", gen_setup, "Setup A, B, C, or D");
  generate->add_option("--n", gen_n, "Rows");
  generate->add_option("--d", gen_d, "Covariate dimension (>= 5)");
  generate->add_option("--sigma", gen_sigma, "Noise level");
  generate->add_option("--seed", gen_seed, "Seed");
  generate->add_option("--out", gen_out, "Output CSV path");
  generate->add_option(
      "--stack-tau", gen_stack_tau,
      "Generate the 10-d stacking DGP instead: smooth or discontinuous");

  // ---- spike ------------------------------------------------------------------
  auto* spike = app.add_subcommand(
      "spike", "Plant a constant treatment effect into a binary-outcome CSV");
  std::string spike_in, spike_out;
  double spike_tau = 0.3;
  std::uint64_t spike_seed = 0;
  spike->add_option("--in", spike_in, "Input dataset CSV (x*, w, y)")->required();
  spike->add_option("--out", spike_out, "Output CSV path")->required();
  spike->add_option("--tau", spike_tau, "Constant effect in [-1, 1]");
  spike->add_option("--seed", spike_seed, "Seed");

  // ---- rates ------------------------------------------------------------------
  auto* rates = app.add_subcommand(
      "rates", "Kernel oracle-vs-feasible regret rates, or the nuisance decay probe");
  std::string rates_setup = "A";
  Index rates_d = 6;
  double rates_sigma = 0.5;
  std::vector<Index> rates_grid{500, 1000, 2000, 4000};
  int rates_reps = 20;
  std::string rates_family = "lasso";
  int rates_folds = 5;
  Index rates_test_n = 10000;
  std::uint64_t rates_seed = 0;
  std::string rates_out = "rates.csv";
  std::string rates_summary_out;
  bool probe = false;
  double probe_kappa = 0.5;
  double probe_scale = 1.0;
  Index probe_n = 4000;
  bool rates_quiet = false;
  rates->add_option("--setup", rates_setup, "Setup A, B, C, or D");
  rates->add_option("--d", rates_d, "Covariate dimension");
  rates->add_option("--sigma", rates_sigma, "Noise level");
  rates->add_option("--n-grid", rates_grid, "Training sizes (>= 3, increasing)")
      ->delimiter(',');
  rates->add_option("--reps", rates_reps, "Replications per size (>= 10)");
  rates->add_option("--nuisance-family", rates_family,
                    "Cross-fitted nuisance family: lasso or boost");
  rates->add_option("--folds", rates_folds, "Nuisance cross-fitting folds");
  rates->add_option("--test-n", rates_test_n, "Evaluation points per replication");
  rates->add_option("--seed", rates_seed, "Root seed");
  rates->add_option("--out", rates_out, "Per-measurement CSV path");
  rates->add_option("--summary-out", rates_summary_out,
                    "Summary CSV path (default: derived from --out)");
  rates->add_flag("--probe", probe,
                  "Run the nuisance corruption probe instead of the n-grid");
  rates->add_option("--kappa", probe_kappa, "Probe: nuisance error decay exponent");
  rates->add_option("--scale", probe_scale, "Probe: corruption amplitude (0 = oracle)");
  rates->add_option("--probe-n", probe_n, "Probe: training size");
  rates->add_flag("--quiet", rates_quiet, "Suppress per-measurement progress");

  // ---- check ------------------------------------------------------------------
  auto* check = app.add_subcommand(
      "check", "Aggregate a records CSV and compare against reference values");
  std::string check_records, check_reference;
  double check_abs_tol = 0.03;
  double check_rel_tol = 0.35;
  check->add_option("--records", check_records, "Per-record CSV from bench")
      ->required();
  check->add_option("--reference", check_reference,
                    "Reference CSV (family,setup,n,d,sigma,learner,mse)")
      ->required();
  check->add_option("--abs-tol", check_abs_tol, "Absolute tolerance");
  check->add_option("--rel-tol", check_rel_tol, "Relative tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (bench->parsed()) {
      BenchConfig config;
      config.setups = parse_setups(setup_names);
      config.n_values = n_values;
      config.d_values = d_values;
      config.sigma_values = sigma_values;
      config.learners = parse_learners(learner_labels);
      config.family = family_from_name(bench_family);
      config.reps = bench_reps;
      config.folds = bench_folds;
      config.seed = bench_seed;
      config.out_path = bench_out;
      config.jobs = bench_jobs;

      const std::size_t cells = config.setups.size() * config.n_values.size() *
                                config.d_values.size() *
                                config.sigma_values.size();
      const std::size_t total_units =
          cells * static_cast<std::size_t>(resolve_reps(config));
      const std::size_t per_unit = config.learners.size();
      std::size_t emitted = 0;
      auto sink = [&](const ExperimentRecord& record) {
        ++emitted;
        if (!bench_quiet && emitted % per_unit == 0)
          std::cerr << "[" << emitted / per_unit << "/" << total_units << "] "
                    << setup_name(record.setup) << " n=" << record.n
                    << " d=" << record.d
                    << " sigma=" << format_double(record.sigma) << " rep "
                    << record.rep << "\n";
      };

      const std::vector<ExperimentRecord> records = run_benchmark(config, sink);
      const std::vector<AggregateRow> table = aggregate(records);
      const std::string aggregate_path = bench_aggregate_out.empty()
                                             ? derived_path(bench_out, "aggregate")
                                             : bench_aggregate_out;
      write_aggregate_csv(aggregate_path, table);
      print_aggregate_table(std::cout, table);
      std::cerr << "records: " << bench_out << "\naggregate: " << aggregate_path
                << "\n";
      return 0;
    }

    if (generate->parsed()) {
      Dataset data;
      if (!gen_stack_tau.empty()) {
        StackDgpSpec spec;
        spec.tau_kind = gen_stack_tau == "smooth" ? StackTau::smooth
                        : gen_stack_tau == "discontinuous"
                            ? StackTau::discontinuous
                            : throw std::invalid_argument(
                                  "--stack-tau must be smooth or discontinuous");
        spec.n = gen_n;
        spec.sigma = gen_sigma;
        spec.seed = gen_seed;
        data = generate_stack_dgp(spec);
      } else {
        SetupSpec spec;
        spec.setup = setup_from_name(gen_setup);
        spec.n = gen_n;
        spec.d = gen_d;
        spec.sigma = gen_sigma;
        spec.seed = gen_seed;
        data = generate_setup(spec);
      }
      write_dataset_csv(data, gen_out);
      std::cerr << "wrote " << data.n() << " rows to " << gen_out << "\n";
      return 0;
    }

    if (spike->parsed()) {
      const Dataset data = read_dataset_csv(spike_in);
      const double tau = spike_tau;
      const SpikeResult result = spike_treatment_effect(
          data.y, data.x,
          [tau](const Eigen::Ref<const MatrixXd>& x) {
            return VectorXd::Constant(x.rows(), tau);
          },
          data.w, Rng(spike_seed));
      Dataset spiked;
      spiked.x = data.x;
      spiked.w = data.w;
      spiked.y = result.y_observed;
      write_dataset_csv(spiked, spike_out);
      std::cout << "planted mean effect "
                << format_double((result.y1 - result.y0).mean()) << " over "
                << data.n() << " rows\n";
      return 0;
    }

    if (rates->parsed()) {
      if (probe) {
        ProbeConfig config;
        config.setup.setup = setup_from_name(rates_setup);
        config.setup.n = probe_n;
        config.setup.d = rates_d;
        config.setup.sigma = rates_sigma;
        config.kappa = probe_kappa;
        config.scale = probe_scale;
        config.test_n = rates_test_n;
        config.seed = rates_seed;
        const ProbeResult result = nuisance_rate_probe(config);
        if (rates->count("--out") > 0) {
          CsvWriter writer(rates_out, {"n", "rep", "learner", "regret"});
          writer.write_row({std::to_string(probe_n), "0", "oracle",
                            format_double(result.oracle_regret)});
          writer.write_row({std::to_string(probe_n), "0", "corrupted",
                            format_double(result.corrupted_regret)});
        }
        std::cout << "oracle regret " << format_double(result.oracle_regret)
                  << "\ncorrupted regret "
                  << format_double(result.corrupted_regret) << "\nratio "
                  << format_double(result.corrupted_regret /
                                   result.oracle_regret)
                  << "\n";
        return 0;
      }
      RateConfig config;
      config.setup.setup = setup_from_name(rates_setup);
      config.setup.d = rates_d;
      config.setup.sigma = rates_sigma;
      config.n_grid = rates_grid;
      config.reps = rates_reps;
      config.nuisance_family = family_from_name(rates_family);
      config.nuisance_folds = rates_folds;
      config.test_n = rates_test_n;
      config.seed = rates_seed;
      if (!rates_quiet)
        config.on_record = [](const RateRecord& record) {
          std::cerr << "n=" << record.n << " rep " << record.rep << " "
                    << record.learner << ": regret "
                    << format_double(record.regret) << "\n";
        };
      const RateResult result = run_rate_experiment(config);
      write_rate_records_csv(rates_out, result);
      const std::string summary_path = rates_summary_out.empty()
                                           ? derived_path(rates_out, "summary")
                                           : rates_summary_out;
      write_rate_summary_csv(summary_path, result);
      for (std::size_t i = 0; i < result.n_grid.size(); ++i)
        std::cout << "n=" << result.n_grid[i] << ": oracle median "
                  << format_double(result.oracle_regret[static_cast<Index>(i)])
                  << ", feasible median "
                  << format_double(result.feasible_regret[static_cast<Index>(i)])
                  << "\n";
      std::cout << "slope oracle " << format_double(result.slope_oracle)
                << ", slope feasible " << format_double(result.slope_feasible)
                << ", ratio max " << format_double(result.ratio_max)
                << ", clamp activations " << result.clamp_activations << "\n";
      return 0;
    }

    if (check->parsed()) {
      const std::vector<ExperimentRecord> records =
          read_records_csv(check_records);
      const std::vector<AggregateRow> table = aggregate(records);
      const std::vector<ReferenceEntry> reference =
          read_reference_csv(check_reference);
      const ComparisonReport report =
          compare_to_reference(table, reference, check_abs_tol, check_rel_tol);
      print_comparison_report(std::cout, report);
      return report.failures > 0 ? 2 : 0;
    }
  } catch (const std::exception& fail) {
    std::cerr << "error: " << fail.what() << "\n";
    return 1;
  }
  return 0;
}
