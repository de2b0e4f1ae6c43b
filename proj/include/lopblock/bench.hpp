#pragma once
// Experiment harness: NMSE-vs-antennas benchmark over the APS recovery
// pipeline, with oracle parameter tuning, parallel trials on deterministic
// per-trial rng streams, and canonicalized CSV/JSON emission.

#include <optional>
#include <string>
#include <vector>

#include "lopblock/aps.hpp"

namespace lop {

enum class OracleTuning {
  kAggregate,  // pick the tuning point minimizing mean NMSE per (method, M)
  kPerTrial,   // pick the best point independently per trial
};

struct ExperimentConfig {
  int schema_version = 1;
  int grid_size = 100;              // N
  std::vector<int> m_list = {4, 8, 16, 32};
  int snapshots = 1000;             // T
  double snr_db = 30.0;
  int trials = 50;
  int dataset_size = 1000;          // L
  int halpern_iters = 1000;
  std::uint64_t master_seed = 1;
  std::string snr_normalizer = "M";         // "M" (antennas) or "N" (grid)
  std::string oracle_tuning = "aggregate";  // or "per_trial"
  std::vector<std::string> methods = {"nnls", "hybrid", "proposed1",
                                      "proposed2"};
  // Tuning grids; each method uses the parameters that appear in its
  // objective (hybrid: mu; proposed1: mu, lambda, beta; proposed2: + omega).
  std::vector<double> mu_grid = {1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  std::vector<double> lambda_grid = {1e-3, 1e-2, 1e-1, 1.0, 10.0};
  std::vector<double> beta_grid = {0.001, 0.005, 0.02, 0.1, 0.25};
  std::vector<double> omega_grid = {0.5, 0.9};
  double solver_tol = 1e-6;
  int solver_max_iter = 4000;

  void validate() const;  // throws std::invalid_argument on bad values
};

struct ResultRow {
  std::string method;
  int m = 0;
  int trial = 0;
  double nmse = 0.0;
  double runtime_ms = 0.0;  // diagnostic only; excluded from rows.csv so
                            // repeated runs stay byte-identical
  double mu = 0.0, lambda = 0.0, beta = 0.0, omega = 0.0;
  bool ok = true;
  std::string status = "ok";
};

struct AggregateRow {
  std::string method;
  int m = 0;
  double mean_nmse = 0.0;
  double std_err = 0.0;
  int n_trials = 0;
  int n_failed = 0;
  double mu = 0.0, lambda = 0.0, beta = 0.0, omega = 0.0;
};

struct ResultsTable {
  std::vector<ResultRow> rows;          // sorted by (method, M, trial)
  std::vector<AggregateRow> aggregates; // sorted by (method, M)
};

// Recompute aggregates from rows (mean and standard error over ok rows).
std::vector<AggregateRow> aggregate_rows(const std::vector<ResultRow>& rows);

// Run the full benchmark. Trials are distributed over `threads` workers
// (0 = hardware concurrency); every trial draws from its own
// mt19937_64(master_seed + trial) stream so scheduling never changes results.
ResultsTable run_experiment(const ExperimentConfig& cfg, int threads = 1);

// Write rows.csv, aggregate.csv, plot_data.csv (format "csv") or
// results.json (format "json") under `dir`; "csv" also writes timings.csv
// with the non-reproducible per-row runtimes.
void emit_results(const ResultsTable& table, const std::string& dir,
                  const std::string& format);

// Re-read a rows.csv produced by emit_results (used by round-trip checks).
std::vector<ResultRow> parse_rows_csv(const std::string& path);

}  // namespace lop
